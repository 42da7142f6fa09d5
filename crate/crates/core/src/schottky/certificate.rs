//! Growth certificate for the Margulis invariants of cyclically reduced
//! words, displacement checks and orbit export.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::generators::{evaluate_word, word_data, word_map, Generator, GeneratorSet};
use super::word::{enumerate, reduced_words, Word};
use crate::error::{Error, Result};
use crate::ext_affine::canonize;
use crate::lie_model::{LieModel, ModelSpec};
use crate::linalg;
use crate::par::{self, Execution};
use crate::rng::Sampler;

pub const CERTIFICATE_LABEL: &str = "empirical";
const ORBIT_STREAM: u64 = 0x6f72_6269;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub max_len: usize,
    /// Slack in ‖M(w)‖ ≥ l·mu_hat − tol.
    pub tol: f64,
    /// Radius of the ball used by the displacement spot checks.
    pub ball_radius: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { max_len: 6, tol: 1e-6, ball_radius: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateRow {
    pub word: Word,
    pub l: usize,
    pub norm_m: f64,
    pub m: Vec<f64>,
    /// ‖M(w) − Σ M(letters)‖.
    pub defect: f64,
    pub s: f64,
    /// Distance between two independent evaluations of M(w).
    pub agreement: f64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisplacementCheck {
    pub word: Word,
    pub radius: f64,
    pub norm_m: f64,
    /// Canonizer bound of the word.
    pub c_word: f64,
    /// Radius of a ball around the origin containing K and every g^{±1}(K).
    pub reach: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub label: String,
    pub model: ModelSpec,
    pub k: usize,
    pub max_len: usize,
    pub tol: f64,
    pub mu_hat: f64,
    pub m0_norm: f64,
    pub c_bound: f64,
    pub word_count: usize,
    pub rows: Vec<CertificateRow>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub all_regular: bool,
    pub growth_ok: bool,
    pub slope_ok: bool,
    pub pass: bool,
    pub failures: Vec<String>,
    pub ball_radius: f64,
    pub spot_checks: Vec<DisplacementCheck>,
}

impl Certificate {
    /// CSV with columns word, l, norm_m, defect.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["word", "l", "norm_m", "defect"])?;
        for r in &self.rows {
            w.write_record([
                r.word.to_string(),
                r.l.to_string(),
                crate::json::fmt_f64(r.norm_m),
                crate::json::fmt_f64(r.defect),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn certify_row(model: &LieModel, gens: &[Generator], m0: &DVector<f64>, w: &Word, tol_gap: f64) -> CertificateRow {
    let l = w.len();
    match word_data(model, gens, w, tol_gap) {
        Ok(d) => CertificateRow {
            word: w.clone(),
            l,
            norm_m: d.m.norm(),
            defect: (&d.m - m0 * l as f64).norm(),
            m: d.m.iter().copied().collect(),
            s: d.s,
            agreement: d.agreement,
            ok: true,
            error: None,
        },
        Err(e) => CertificateRow {
            word: w.clone(),
            l,
            norm_m: f64::NAN,
            defect: f64::NAN,
            m: Vec::new(),
            s: f64::NAN,
            agreement: f64::NAN,
            ok: false,
            error: Some(e.to_string()),
        },
    }
}

/// Enumerates every cyclically reduced word of length 1..=max_len, computes
/// its Margulis invariant and checks ‖M(w)‖ ≥ l·mu_hat − tol.  All letters
/// carry M₀, so Σ M(letters) = l·M₀.
pub fn certify_growth(
    model: &LieModel,
    set: &GeneratorSet,
    cfg: &CertifyConfig,
    exec: Execution,
) -> Result<Certificate> {
    if cfg.max_len == 0 {
        return Err(Error::InvalidInput("max_len must be at least 1".into()));
    }
    if !(cfg.tol > 0.0 && cfg.ball_radius >= 0.0) {
        return Err(Error::InvalidInput("tol must be positive and ball_radius non-negative".into()));
    }
    let gens = set.maps(model)?;
    let m0 = set.m0_vector();
    let words = enumerate(gens.len(), cfg.max_len)?;
    let rows = par::map(exec, &words, |w| certify_row(model, &gens, &m0, w, set.tol_gap));

    let mut failures = Vec::new();
    let mut growth_ok = true;
    for r in &rows {
        if let Some(e) = &r.error {
            failures.push(format!("{}: {e}", r.word));
        } else if !(r.norm_m >= r.l as f64 * set.mu_hat - cfg.tol) {
            growth_ok = false;
            failures.push(format!(
                "{}: ‖M‖ = {:.6e} below l·mu_hat = {:.6e}",
                r.word,
                r.norm_m,
                r.l as f64 * set.mu_hat
            ));
        }
    }
    let all_regular = rows.iter().all(|r| r.ok);
    let good: Vec<&CertificateRow> = rows.iter().filter(|r| r.ok).collect();
    let xs: Vec<f64> = good.iter().map(|r| r.l as f64).collect();
    let ys: Vec<f64> = good.iter().map(|r| r.norm_m).collect();
    let (slope, intercept, r2) = if cfg.max_len >= 2 && !good.is_empty() {
        linalg::linear_fit(&xs, &ys)
    } else {
        let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
        (mean, 0.0, 1.0)
    };
    let slope_ok = slope >= set.mu_hat;
    if !slope_ok {
        failures.push(format!("growth slope {slope:.6e} below mu_hat = {:.6e}", set.mu_hat));
    }

    let mut spot_checks = Vec::new();
    if all_regular {
        for l in 1..=cfg.max_len {
            if let Some(w) = words.iter().find(|w| w.len() == l) {
                spot_checks.push(check_displacement(model, &gens, w, cfg.ball_radius, set.tol_gap)?);
            }
        }
    }

    Ok(Certificate {
        label: CERTIFICATE_LABEL.into(),
        model: set.model,
        k: gens.len(),
        max_len: cfg.max_len,
        tol: cfg.tol,
        mu_hat: set.mu_hat,
        m0_norm: m0.norm(),
        c_bound: set.c_bound,
        word_count: rows.len(),
        pass: all_regular && growth_ok && slope_ok,
        rows,
        slope,
        intercept,
        r2,
        all_regular,
        growth_ok,
        slope_ok,
        failures,
        ball_radius: cfg.ball_radius,
        spot_checks,
    })
}

/// Sufficient condition for w(K) ∩ K = ∅ with K the closed ball of the given
/// radius about the origin: ‖M(w)‖ > 2·C_w·D, where C_w is the canonizer
/// bound of w and D bounds ‖x‖ over K ∪ ⋃ g^{±1}(K).  `false` means
/// inconclusive.
pub fn check_displacement(
    model: &LieModel,
    gens: &[Generator],
    w: &Word,
    radius: f64,
    tol_gap: f64,
) -> Result<DisplacementCheck> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidInput("radius must be non-negative".into()));
    }
    let data = word_data(model, gens, w, tol_gap).map_err(|e| Error::Domain(format!("word {w}: {e}")))?;
    let c_word = canonize(model, &word_map(gens, w)?, tol_gap)?.c_bound;
    let reach = radius
        + gens
            .iter()
            .flat_map(|g| [&g.fwd, &g.inv])
            .map(|g| linalg::op_norm(&g.lin) * radius + g.trans.norm())
            .fold(0.0, f64::max);
    let norm_m = data.m.norm();
    let threshold = 2.0 * c_word * reach;
    Ok(DisplacementCheck { word: w.clone(), radius, norm_m, c_word, reach, threshold, holds: norm_m > threshold })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitPoint {
    pub word: Word,
    pub point: usize,
    pub coords: Vec<f64>,
}

/// Images of `n_points` uniform samples of the ball of the given radius
/// under every reduced word of length 0..=max_len.
pub fn export_orbits(
    model: &LieModel,
    gens: &[Generator],
    max_len: usize,
    radius: f64,
    n_points: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<OrbitPoint>> {
    if gens.is_empty() {
        return Err(Error::InvalidInput("no generators".into()));
    }
    let mut rng = Sampler::derive(seed, ORBIT_STREAM);
    let dim = model.dim_g;
    let ball: Vec<DVector<f64>> =
        (0..n_points).map(|_| rng.unit_vector(dim) * (radius * rng.uniform().powf(1.0 / dim as f64))).collect();
    let mut words = vec![Word::empty()];
    for l in 1..=max_len {
        words.extend(reduced_words(gens.len(), l)?);
    }
    let images = par::map(exec, &words, |w| -> Result<Vec<OrbitPoint>> {
        let g = evaluate_word(model, gens, w)?;
        Ok(ball
            .iter()
            .enumerate()
            .map(|(i, x)| OrbitPoint { word: w.clone(), point: i, coords: g.apply_point(x).iter().copied().collect() })
            .collect())
    });
    let mut out = Vec::with_capacity(words.len() * n_points);
    for r in images {
        out.extend(r?);
    }
    Ok(out)
}

/// CSV with columns word, point, x0, x1, ….
pub fn write_orbits_csv<W: Write>(points: &[OrbitPoint], dim: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["word".to_string(), "point".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for p in points {
        let mut rec = vec![p.word.to_string(), p.point.to_string()];
        rec.extend(p.coords.iter().map(|&x| crate::json::fmt_f64(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_affine::ExtAffineMap;
    use crate::lie_model::{build_model, Family};
    use crate::schottky::{build_generators, cyclically_reduced_count, BuildConfig};
    use proptest::prelude::*;

    fn sl2_set() -> (LieModel, GeneratorSet) {
        let m = build_model(Family::Sl, 2).unwrap();
        let set = build_generators(&m, &BuildConfig { seed: 7, ..Default::default() }, Execution::Parallel).unwrap();
        (m, set)
    }

    /// One canonical generator τ_v exp(a) with a small linear part.
    fn slow_generator(m: &LieModel) -> Vec<Generator> {
        let h = m.exp(&m.a_element(&[0.5]));
        let g = ExtAffineMap::from_defining(m, &h, m.embed_z(&DVector::from_vec(vec![1.0]))).unwrap();
        vec![Generator::new(m, g)]
    }

    #[test]
    fn length_one_rows() {
        let (m, set) = sl2_set();
        let cfg = CertifyConfig { max_len: 1, ..Default::default() };
        let c = certify_growth(&m, &set, &cfg, Execution::Sequential).unwrap();
        assert_eq!(c.rows.len(), 4);
        for r in &c.rows {
            assert!((r.norm_m - 2.0 * set.mu_hat).abs() < 1e-6);
            assert!(r.defect < 1e-6);
        }
        assert!(c.pass);
    }

    #[test]
    fn sl2_certificate_passes() {
        let (m, set) = sl2_set();
        let cfg = CertifyConfig::default();
        let c = certify_growth(&m, &set, &cfg, Execution::Parallel).unwrap();
        assert!(c.pass, "{:?}", c.failures);
        assert_eq!(c.label, CERTIFICATE_LABEL);
        assert_eq!(c.word_count, (1..=6).map(|l| cyclically_reduced_count(2, l)).sum::<usize>());
        assert!(c.slope >= set.mu_hat && c.slope <= 3.0 * set.mu_hat);
        for r in &c.rows {
            assert!(r.ok && r.norm_m >= r.l as f64 * set.mu_hat - cfg.tol);
        }
        let seq = certify_growth(&m, &set, &cfg, Execution::Sequential).unwrap();
        assert_eq!(crate::json::to_string(&c).unwrap(), crate::json::to_string(&seq).unwrap());

        let mut csv = Vec::new();
        c.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), c.rows.len() + 1);
        assert!(text.starts_with("word,l,norm_m,defect\n"));
    }

    #[test]
    fn inverse_words_follow_the_weyl_symmetry() {
        let (m, set) = sl2_set();
        let gens = set.maps(&m).unwrap();
        for w in enumerate(2, 3).unwrap() {
            let mw = word_data(&m, &gens, &w, set.tol_gap).unwrap().m;
            let mi = word_data(&m, &gens, &w.inverse(), set.tol_gap).unwrap().m;
            assert!((mi + m.w0_on_z(&mw)).norm() < 1e-7, "{w}");
        }
    }

    #[test]
    fn powers_of_a_generator() {
        let (m, set) = sl2_set();
        let gens = set.maps(&m).unwrap();
        let m0 = set.m0_vector();
        let mut prev_s = f64::INFINITY;
        for n in 1..=6 {
            let w = Word(vec![crate::schottky::Letter::new(0, false); n]);
            let d = word_data(&m, &gens, &w, set.tol_gap).unwrap();
            assert!((d.m.norm() - n as f64 * m0.norm()).abs() < 1e-6 * n as f64);
            assert!(d.s < prev_s);
            prev_s = d.s;
        }
    }

    #[test]
    fn displacement_examples() {
        let m = build_model(Family::Sl, 2).unwrap();
        let gens = slow_generator(&m);
        let long = Word(vec![crate::schottky::Letter::new(0, false); 400]);
        assert!(check_displacement(&m, &gens, &long, 1.0, 1e-6).unwrap().holds);
        let short = Word(vec![crate::schottky::Letter::new(0, false)]);
        assert!(!check_displacement(&m, &gens, &short, 1e6, 1e-6).unwrap().holds);
        let identity = ExtAffineMap::identity(&m);
        let flat = vec![Generator::new(&m, identity)];
        assert!(matches!(check_displacement(&m, &flat, &short, 1.0, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn hand_made_h4_violation_fails_certificate() {
        let m = build_model(Family::Sl, 2).unwrap();
        let gens = slow_generator(&m);
        let set = GeneratorSet::from_maps(&m, &[gens[0].fwd.clone()], &DVector::from_vec(vec![3.0]));
        let c = certify_growth(&m, &set, &CertifyConfig { max_len: 3, ..Default::default() }, Execution::Sequential)
            .unwrap();
        assert!(!c.pass && !c.growth_ok);
    }

    #[test]
    fn orbit_export() {
        let (m, set) = sl2_set();
        let gens = set.maps(&m).unwrap();
        let ball = export_orbits(&m, &gens, 0, 0.5, 10, 1, Execution::Sequential).unwrap();
        assert_eq!(ball.len(), 10);
        assert!(ball.iter().all(|p| p.word.is_empty() && DVector::from_vec(p.coords.clone()).norm() <= 0.5));
        let two = export_orbits(&m, &gens, 2, 0.5, 3, 1, Execution::Parallel).unwrap();
        assert_eq!(two.len(), (1 + 4 + 12) * 3);
        let mut out = Vec::new();
        write_orbits_csv(&two, m.dim_g, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("word,point,x0,x1,x2\ne,0,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn displacement_is_monotone_in_radius(l in 1usize..300, r in 0.0f64..10.0, shrink in 0.0f64..1.0) {
            let m = build_model(Family::Sl, 2).unwrap();
            let gens = slow_generator(&m);
            let w = Word(vec![crate::schottky::Letter::new(0, false); l]);
            let big = check_displacement(&m, &gens, &w, r, 1e-6).unwrap();
            let small = check_displacement(&m, &gens, &w, r * shrink, 1e-6).unwrap();
            prop_assert!(!big.holds || small.holds);
        }
    }
}
