//! Extended affine maps on ĝ = g ⊕ R₀, their dynamical splittings,
//! contraction strength, canonizing maps and Margulis invariants.

mod canonize;
mod margulis;
mod splitting;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_model::LieModel;
use crate::linalg;

pub use canonize::{
    canonize, linear_canonizer, pair_bound, pair_canonize, projections_commute_composite, Canonizer, CanonizerReport,
    LinearCanonizer,
};
pub use margulis::{margulis_invariant, margulis_of_splitting, margulis_witness, MargulisReport};
pub use splitting::{contraction_strength, hausdorff_angle, is_r_regular, DynamicalSplitting};

/// Default eigenvalue-modulus tolerance for splittings.
pub const DEFAULT_TOL_GAP: f64 = 1e-6;

/// An element of G⋉g acting on ĝ by the block matrix (lin, trans; 0, 1).
#[derive(Debug, Clone)]
pub struct ExtAffineMap {
    pub lin: DMatrix<f64>,
    pub trans: DVector<f64>,
    /// Defining-representation matrix h with Ad(h) = lin, when known.
    pub defining: Option<DMatrix<f64>>,
}

/// JSON form `{"defining": [[...]], "translation": [...]}`.  Maps without a
/// defining witness carry their adjoint matrix in `"adjoint"` instead.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MapJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defining: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint: Option<Vec<Vec<f64>>>,
    pub translation: Vec<f64>,
}

impl ExtAffineMap {
    pub fn identity(model: &LieModel) -> Self {
        let nd = model.defining_dim();
        Self {
            lin: DMatrix::identity(model.dim_g, model.dim_g),
            trans: DVector::zeros(model.dim_g),
            defining: Some(DMatrix::identity(nd, nd)),
        }
    }

    /// τ_trans ∘ Ad(h).
    pub fn from_defining(model: &LieModel, h: &DMatrix<f64>, trans: DVector<f64>) -> Result<Self> {
        if trans.len() != model.dim_g {
            return Err(Error::InvalidInput(format!(
                "translation has length {}, expected {}",
                trans.len(),
                model.dim_g
            )));
        }
        let lin = model.adjoint_matrix(h)?;
        Ok(Self { lin, trans, defining: Some(h.clone()) })
    }

    pub fn linear(model: &LieModel, h: &DMatrix<f64>) -> Result<Self> {
        Self::from_defining(model, h, DVector::zeros(model.dim_g))
    }

    /// Pure translation τ_v.
    pub fn translation(model: &LieModel, v: DVector<f64>) -> Self {
        let mut g = Self::identity(model);
        g.trans = v;
        g
    }

    /// From a ĝ matrix with last row (0, …, 0, 1).
    pub fn from_hat(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if d < 2 || m.ncols() != d {
            return Err(Error::InvalidInput("extended matrix must be square".into()));
        }
        let mut last = m.row(d - 1).into_owned();
        last[d - 1] -= 1.0;
        if last.norm() > 1e-12 {
            return Err(Error::InvalidInput("last row of an extended affine matrix must be (0,…,0,1)".into()));
        }
        Ok(Self {
            lin: m.view((0, 0), (d - 1, d - 1)).into_owned(),
            trans: m.view((0, d - 1), (d - 1, 1)).column(0).into_owned(),
            defining: None,
        })
    }

    pub fn dim_g(&self) -> usize {
        self.lin.nrows()
    }

    pub fn hat(&self) -> DMatrix<f64> {
        let n = self.dim_g();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.lin);
        m.view_mut((0, n), (n, 1)).copy_from(&self.trans);
        m[(n, n)] = 1.0;
        m
    }

    /// self ∘ other.
    pub fn compose(&self, other: &Self) -> Self {
        let defining = match (&self.defining, &other.defining) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Self { lin: &self.lin * &other.lin, trans: &self.lin * &other.trans + &self.trans, defining }
    }

    pub fn inverse(&self) -> Self {
        let lin_inv = self.lin.clone().try_inverse().expect("adjoint matrices are invertible");
        let trans = -(&lin_inv * &self.trans);
        let defining = self.defining.as_ref().and_then(|h| h.clone().try_inverse());
        Self { lin: lin_inv, trans, defining }
    }

    /// Inverse using the group structure of the model for the linear part.
    pub fn inverse_in(&self, model: &LieModel) -> Self {
        match &self.defining {
            Some(h) => {
                let hinv = model.group_inverse(h).expect("group elements are invertible");
                let lin = model.adjoint_unchecked(&hinv, h);
                let trans = -(&lin * &self.trans);
                Self { lin, trans, defining: Some(hinv) }
            }
            None => self.inverse(),
        }
    }

    pub fn linear_part(&self) -> Self {
        Self { lin: self.lin.clone(), trans: DVector::zeros(self.dim_g()), defining: self.defining.clone() }
    }

    /// Conjugate ψ ∘ self ∘ ψ⁻¹.
    pub fn conjugate_by(&self, psi: &Self, model: &LieModel) -> Self {
        psi.compose(self).compose(&psi.inverse_in(model))
    }

    /// Image of a point of g.
    pub fn apply_point(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.lin * x + &self.trans
    }

    /// Relative residual of Killing-form preservation by the linear part.
    pub fn killing_residual(&self, killing: &DMatrix<f64>) -> f64 {
        let r = self.lin.transpose() * killing * &self.lin - killing;
        r.norm() / killing.norm()
    }

    pub fn to_json(&self) -> MapJson {
        MapJson {
            defining: self.defining.as_ref().map(linalg::to_rows),
            adjoint: if self.defining.is_some() { None } else { Some(linalg::to_rows(&self.lin)) },
            translation: self.trans.iter().copied().collect(),
        }
    }

    pub fn from_json(model: &LieModel, j: &MapJson) -> Result<Self> {
        let trans = DVector::from_vec(j.translation.clone());
        match (&j.defining, &j.adjoint) {
            (Some(rows), _) => Self::from_defining(model, &linalg::from_rows(rows)?, trans),
            (None, Some(rows)) => {
                let lin = linalg::from_rows(rows)?;
                if lin.nrows() != model.dim_g || lin.ncols() != model.dim_g || trans.len() != model.dim_g {
                    return Err(Error::InvalidInput("adjoint matrix has the wrong size".into()));
                }
                let g = Self { lin, trans, defining: None };
                if g.killing_residual(&model.killing_matrix()) > 1e-8 {
                    return Err(Error::Domain("adjoint matrix does not preserve the Killing form".into()));
                }
                Ok(g)
            }
            (None, None) => Err(Error::InvalidInput("map needs \"defining\" or \"adjoint\"".into())),
        }
    }
}

/// Anything that acts on ĝ and has a dynamical splitting: a single map or a
/// product of maps evaluated letter by letter.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;
    fn apply_hat(&self, m: &DMatrix<f64>) -> DMatrix<f64>;
    fn apply_hat_inv(&self, m: &DMatrix<f64>) -> DMatrix<f64>;
    fn splitting(&self, model: &LieModel, tol_gap: f64) -> Result<DynamicalSplitting>;
}

impl Dynamics for ExtAffineMap {
    fn dim(&self) -> usize {
        self.dim_g() + 1
    }

    fn apply_hat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.hat() * m
    }

    fn apply_hat_inv(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.inverse().hat() * m
    }

    fn splitting(&self, _model: &LieModel, tol_gap: f64) -> Result<DynamicalSplitting> {
        splitting::schur_splitting(self, tol_gap)
    }
}

/// The product f₀ ∘ f₁ ∘ ⋯ ∘ f_{l−1}, never multiplied out.
#[derive(Debug, Clone)]
pub struct ProductMap {
    hats: Vec<DMatrix<f64>>,
    inv_hats: Vec<DMatrix<f64>>,
}

impl ProductMap {
    pub fn new(factors: &[ExtAffineMap], model: &LieModel) -> Self {
        Self {
            hats: factors.iter().map(|f| f.hat()).collect(),
            inv_hats: factors.iter().map(|f| f.inverse_in(model).hat()).collect(),
        }
    }

    /// Product from factors with precomputed inverses.
    pub fn from_pairs(pairs: &[(&ExtAffineMap, &ExtAffineMap)]) -> Self {
        Self {
            hats: pairs.iter().map(|(f, _)| f.hat()).collect(),
            inv_hats: pairs.iter().map(|(_, g)| g.hat()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.hats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hats.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            hats: self.inv_hats.iter().rev().cloned().collect(),
            inv_hats: self.hats.iter().rev().cloned().collect(),
        }
    }

    /// Matrices in the order they act on a vector (last factor first).
    pub(crate) fn application_order(&self) -> std::iter::Rev<std::slice::Iter<'_, DMatrix<f64>>> {
        self.hats.iter().rev()
    }

    /// The explicit product; loses accuracy on long contracting words.
    pub fn evaluate(&self) -> Result<ExtAffineMap> {
        let d = self.hats.first().map(|h| h.nrows()).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidInput("empty product has no dimension".into()));
        }
        let mut m = DMatrix::identity(d, d);
        for h in &self.hats {
            m *= h;
        }
        ExtAffineMap::from_hat(&m)
    }
}

impl Dynamics for ProductMap {
    fn dim(&self) -> usize {
        self.hats[0].nrows()
    }

    fn apply_hat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for h in self.application_order() {
            out = h * out;
        }
        out
    }

    fn apply_hat_inv(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for h in &self.inv_hats {
            out = h * out;
        }
        out
    }

    fn splitting(&self, model: &LieModel, tol_gap: f64) -> Result<DynamicalSplitting> {
        splitting::product_splitting(self, model, tol_gap)
    }
}

/// Image of each column under the ĝ map: used to push subspaces forward.
pub fn push_subspace(g: &ExtAffineMap, basis: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::orth(&(g.hat() * basis), 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_model::{build_model, Family};
    use crate::rng::Sampler;

    #[test]
    fn group_laws() {
        let m = build_model(Family::SoN1, 3).unwrap();
        let mut rng = Sampler::new(3);
        let h = m.random_group_element(&mut rng, 0.5);
        let g = ExtAffineMap::from_defining(&m, &h, rng.normal_vector(m.dim_g)).unwrap();
        let id = g.compose(&g.inverse_in(&m));
        assert!((id.hat() - DMatrix::<f64>::identity(7, 7)).norm() < 1e-9);
        let lp = g.linear_part();
        assert!(lp.trans.norm() == 0.0);
        let t = ExtAffineMap::translation(&m, rng.normal_vector(m.dim_g));
        assert!((t.linear_part().hat() - DMatrix::<f64>::identity(7, 7)).norm() == 0.0);
        let tg = t.compose(&g.linear_part());
        assert!((tg.linear_part().lin - &g.lin).norm() < 1e-12);
        let k = m.killing_matrix();
        assert!(g.killing_residual(&k) < 1e-10);
    }

    #[test]
    fn linear_part_is_multiplicative() {
        let m = build_model(Family::Sl, 3).unwrap();
        let mut rng = Sampler::new(5);
        let g = ExtAffineMap::from_defining(&m, &m.random_group_element(&mut rng, 0.4), rng.normal_vector(8)).unwrap();
        let h = ExtAffineMap::from_defining(&m, &m.random_group_element(&mut rng, 0.4), rng.normal_vector(8)).unwrap();
        let lhs = g.compose(&h).linear_part();
        let rhs = g.linear_part().compose(&h.linear_part());
        assert!((lhs.hat() - rhs.hat()).norm() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let m = build_model(Family::Sl, 2).unwrap();
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let g = ExtAffineMap::from_defining(&m, &h, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap();
        let j = g.to_json();
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, r#"{"defining":[[2.0,0.0],[0.0,0.5]],"translation":[0.0,1.0,0.0]}"#);
        let back = ExtAffineMap::from_json(&m, &serde_json::from_str(&s).unwrap()).unwrap();
        assert!((back.hat() - g.hat()).norm() == 0.0);
    }

    #[test]
    fn product_matches_explicit() {
        let m = build_model(Family::Sl, 2).unwrap();
        let mut rng = Sampler::new(9);
        let fs: Vec<ExtAffineMap> = (0..3)
            .map(|_| {
                ExtAffineMap::from_defining(&m, &m.random_group_element(&mut rng, 0.5), rng.normal_vector(3)).unwrap()
            })
            .collect();
        let p = ProductMap::new(&fs, &m);
        let explicit = fs[0].compose(&fs[1]).compose(&fs[2]);
        assert!((p.evaluate().unwrap().hat() - explicit.hat()).norm() < 1e-10);
        let v = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        assert!((p.apply_hat(&v) - explicit.hat() * &v).norm() < 1e-9);
        assert!((p.inverse().apply_hat(&v) - explicit.inverse().hat() * &v).norm() < 1e-8);
        assert!((p.apply_hat_inv(&v) - explicit.inverse().hat() * &v).norm() < 1e-8);
    }
}
