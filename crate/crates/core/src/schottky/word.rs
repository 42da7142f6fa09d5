//! Words in the free group on k letters.  Letter i with sign + is written
//! as the i-th lowercase letter, with sign − as the uppercase one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_LETTERS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    /// 0-based generator index.
    pub index: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(index: usize, inverse: bool) -> Self {
        Self { index, inverse }
    }

    pub fn inv(self) -> Self {
        Self { index: self.index, inverse: !self.inverse }
    }

    pub fn sign(self) -> i32 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    /// Position in the order a < A < b < B < ⋯.
    pub fn rank(self) -> usize {
        2 * self.index + usize::from(self.inverse)
    }

    pub fn from_rank(r: usize) -> Self {
        Self { index: r / 2, inverse: r % 2 == 1 }
    }

    fn to_char(self) -> char {
        let c = (b'a' + self.index as u8) as char;
        if self.inverse {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.iter().map(|l| l.index).max()
    }

    pub fn reduce(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[1] != w[0].inv())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced() && (self.0.len() < 2 || self.0[0] != self.0[self.0.len() - 1].inv())
    }

    /// (u, c) with reduce(w) = c·u·c⁻¹ and u cyclically reduced.
    pub fn cyclic_conjugate_to_reduced(&self) -> (Self, Self) {
        let r = self.reduce().0;
        let (mut i, mut j) = (0, r.len());
        while j >= i + 2 && r[i] == r[j - 1].inv() {
            i += 1;
            j -= 1;
        }
        (Self(r[i..j].to_vec()), Self(r[..i].to_vec()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "e" || s.is_empty() {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| {
                if c.is_ascii_lowercase() {
                    Ok(Letter::new((c as u8 - b'a') as usize, false))
                } else if c.is_ascii_uppercase() {
                    Ok(Letter::new((c as u8 - b'A') as usize, true))
                } else {
                    Err(Error::InvalidInput(format!("bad letter {c:?} in word {s:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_LETTERS {
        return Err(Error::InvalidInput(format!("number of generators must be in 1..={MAX_LETTERS}")));
    }
    Ok(())
}

/// All reduced words of length exactly `l`, lexicographic in a < A < b < ⋯.
pub fn reduced_words(k: usize, l: usize) -> Result<Vec<Word>> {
    check_k(k)?;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fn rec(k: usize, l: usize, cur: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if cur.len() == l {
            out.push(Word(cur.clone()));
            return;
        }
        for r in 0..2 * k {
            let x = Letter::from_rank(r);
            if cur.last() == Some(&x.inv()) {
                continue;
            }
            cur.push(x);
            rec(k, l, cur, out);
            cur.pop();
        }
    }
    rec(k, l, &mut cur, &mut out);
    Ok(out)
}

/// All cyclically reduced words of length exactly `l`, in lexicographic order.
pub fn cyclically_reduced_words(k: usize, l: usize) -> Result<Vec<Word>> {
    Ok(reduced_words(k, l)?.into_iter().filter(|w| w.is_cyclically_reduced()).collect())
}

/// Cyclically reduced words of lengths 1..=max_len, shorter words first.
pub fn enumerate(k: usize, max_len: usize) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for l in 1..=max_len {
        out.extend(cyclically_reduced_words(k, l)?);
    }
    Ok(out)
}

/// (2k−1)ˡ + 1 + (k−1)(1 + (−1)ˡ).
pub fn cyclically_reduced_count(k: usize, l: usize) -> usize {
    if l == 0 {
        return 1;
    }
    let even = usize::from(l.is_multiple_of(2));
    (2 * k - 1).pow(l as u32) + 1 + (k - 1) * 2 * even
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// All (2k)ˡ letter sequences, filtered.
    fn brute_force(k: usize, l: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let total = (2 * k).pow(l as u32);
        for mut code in 0..total {
            let mut letters = vec![Letter::new(0, false); l];
            for slot in (0..l).rev() {
                letters[slot] = Letter::from_rank(code % (2 * k));
                code /= 2 * k;
            }
            let word = Word(letters);
            if word.is_cyclically_reduced() {
                out.push(word);
            }
        }
        out
    }

    #[test]
    fn examples() {
        assert_eq!(w("aAb").reduce(), w("b"));
        assert!(!w("abA").is_cyclically_reduced());
        assert_eq!(w("abA").cyclic_conjugate_to_reduced(), (w("b"), w("a")));
        assert_eq!(w("e"), Word::empty());
        assert_eq!(Word::empty().to_string(), "e");
        assert!(w("a").is_cyclically_reduced());
        assert!(w("ab").is_cyclically_reduced());
        assert!(!w("aA").is_reduced());
        assert!("a1".parse::<Word>().is_err());
    }

    #[test]
    fn counts_match_brute_force() {
        for k in 1..=3 {
            for l in 1..=5 {
                let fast = cyclically_reduced_words(k, l).unwrap();
                let slow = brute_force(k, l);
                assert_eq!(fast, slow, "k={k} l={l}");
                assert_eq!(fast.len(), cyclically_reduced_count(k, l));
            }
        }
        let counts: Vec<usize> = (1..=6).map(|l| cyclically_reduced_words(2, l).unwrap().len()).collect();
        assert_eq!(counts, vec![4, 12, 28, 84, 244, 732]);
        assert_eq!(reduced_words(2, 3).unwrap().len(), 36);
    }

    fn arb_word() -> impl Strategy<Value = Word> {
        prop::collection::vec((0usize..3, any::<bool>()), 0..12)
            .prop_map(|v| Word(v.into_iter().map(|(i, s)| Letter::new(i, s)).collect()))
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(x in arb_word()) {
            let r = x.reduce();
            prop_assert!(r.is_reduced());
            prop_assert_eq!(r.reduce(), r.clone());
            prop_assert_eq!(x.concat(&x.inverse()).reduce(), Word::empty());
        }

        #[test]
        fn cyclic_conjugate_recomposes(x in arb_word()) {
            let (u, c) = x.cyclic_conjugate_to_reduced();
            prop_assert!(u.is_cyclically_reduced());
            prop_assert_eq!(c.concat(&u).concat(&c.inverse()).reduce(), x.reduce());
        }

        #[test]
        fn display_round_trip(x in arb_word()) {
            prop_assert_eq!(x.to_string().parse::<Word>().unwrap(), x);
        }
    }
}
