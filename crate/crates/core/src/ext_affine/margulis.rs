use nalgebra::DVector;
use serde::Serialize;

use super::canonize::{linear_canonizer, linear_part_of};
use super::{DynamicalSplitting, Dynamics};
use crate::error::{Error, Result};
use crate::lie_model::LieModel;
use crate::rng::Sampler;

const AGREEMENT_TOL: f64 = 1e-7;
const WITNESS_SEED: u64 = 0x7769_746e;

#[derive(Debug, Clone, Serialize)]
pub struct MargulisReport {
    /// Coordinates in the z-basis.
    pub value: Vec<f64>,
    pub second_witness: Vec<f64>,
    pub agreement: f64,
}

/// One evaluation of M(g) = π_z(φ(g(x) − x)).  Variant 0 uses the default
/// canonizer and base point; other variants perturb the canonizer by a
/// random element of L, use a different generic neutral element, and move
/// the base point inside A=.
///
/// The displacement g(x) − x is read off the action of g on A≥/V>, which is
/// bounded even when g is a long product.
pub fn margulis_witness(model: &LieModel, split: &DynamicalSplitting, variant: u64) -> Result<DVector<f64>> {
    if !split.is_regular(model) {
        return Err(Error::Domain("Margulis invariant needs an R-regular map".into()));
    }
    let d = model.dim_ghat();
    let v_ge = linear_part_of(&split.a_ge)?;
    let v_le = linear_part_of(&split.a_le)?;
    let lc = linear_canonizer(model, &v_ge, &v_le, variant)?;
    let ad = if variant == 0 {
        lc.ad_inv.clone()
    } else {
        let mut rng = Sampler::derive(WITNESS_SEED, variant);
        let a = model.a_element(&(0..model.rank()).map(|_| 0.3 * rng.normal()).collect::<Vec<_>>());
        let l = model.exp(&a) * model.exp(&model.random_m(&mut rng, 1.0));
        let l_inv = model.group_inverse(&l)?;
        model.adjoint_unchecked(&(&l * &lc.p_inv), &(&lc.p * l_inv))
    };

    let q0 = &split.a_ge;
    let p = q0.ncols();
    let ngt = split.vgt.ncols();
    let last = q0.row(d - 1).transpose();
    let mut a = &last / last.norm_squared();
    if variant != 0 {
        let mut rng = Sampler::derive(WITNESS_SEED ^ 0xff, variant);
        let delta = rng.normal_vector(p);
        let delta = &delta - &last * (last.dot(&delta) / last.norm_squared());
        a += delta;
    }
    let c = a.rows(ngt, p - ngt).into_owned();
    let n = &split.neutral_block;
    let yq = n * &c - &c;
    let y = q0.columns(ngt, p - ngt) * yq;
    let img = ad * y.rows(0, model.dim_g);
    Ok(img.rows(model.z.start, model.z.len()).into_owned())
}

/// Margulis invariant with the built-in second-witness check.
pub fn margulis_of_splitting(model: &LieModel, split: &DynamicalSplitting) -> Result<MargulisReport> {
    let m0 = margulis_witness(model, split, 0)?;
    let m1 = margulis_witness(model, split, 1)?;
    let agreement = (&m0 - &m1).norm();
    if agreement > AGREEMENT_TOL * m0.norm().max(1.0) {
        return Err(Error::NumericalInstability(format!("Margulis witnesses disagree by {agreement:.3e}")));
    }
    Ok(MargulisReport { value: m0.iter().copied().collect(), second_witness: m1.iter().copied().collect(), agreement })
}

pub fn margulis_invariant<D: Dynamics + ?Sized>(model: &LieModel, g: &D, tol_gap: f64) -> Result<DVector<f64>> {
    let split = g.splitting(model, tol_gap)?;
    let r = margulis_of_splitting(model, &split)?;
    Ok(DVector::from_vec(r.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_affine::{ExtAffineMap, ProductMap};
    use crate::lie_model::{build_model, Family};
    use nalgebra::DMatrix;

    fn regular_affine(model: &LieModel, rng: &mut Sampler, v: &DVector<f64>) -> ExtAffineMap {
        let a = model.random_a_plus(rng, 0.6, 1.5) + model.random_m(rng, 1.0);
        let base = ExtAffineMap::from_defining(model, &model.exp(&a), v.clone()).unwrap();
        let psi_h = model.random_group_element(rng, 0.4);
        let psi = ExtAffineMap::from_defining(model, &psi_h, rng.normal_vector(model.dim_g) * 0.5).unwrap();
        base.conjugate_by(&psi, model)
    }

    #[test]
    fn canonical_form_value() {
        let m = build_model(Family::Sl, 2).unwrap();
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let g = ExtAffineMap::from_defining(&m, &h, m.e(1) * 0.8).unwrap();
        let mv = margulis_invariant(&m, &g, 1e-6).unwrap();
        assert!((mv[0] - 0.8).abs() < 1e-12);
        let lin = ExtAffineMap::linear(&m, &h).unwrap();
        assert!(margulis_invariant(&m, &lin, 1e-6).unwrap().norm() < 1e-12);
    }

    #[test]
    fn conjugation_and_inverse() {
        for spec in ["sl:3", "so:3", "so:4"] {
            let m = LieModel::build(spec.parse().unwrap()).unwrap();
            let mut rng = Sampler::new(31);
            for _ in 0..5 {
                let mut v = DVector::zeros(m.dim_g);
                for i in m.l() {
                    v[i] = rng.normal();
                }
                let g = regular_affine(&m, &mut rng, &v);
                let mv = margulis_invariant(&m, &g, 1e-6).unwrap();
                let expected = v.rows(m.z.start, m.z.len()).into_owned();
                assert!((&mv - &expected).norm() < 1e-8, "{spec}: {mv} vs {expected}");
                let mi = margulis_invariant(&m, &g.inverse_in(&m), 1e-6).unwrap();
                assert!((mi + m.w0_on_z(&mv)).norm() < 1e-8, "{spec}");
                for variant in 2..6 {
                    let s = g.splitting(&m, 1e-6).unwrap();
                    let w = margulis_witness(&m, &s, variant).unwrap();
                    assert!((w - &mv).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn product_route_agrees() {
        let m = build_model(Family::SoN1, 4).unwrap();
        let mut rng = Sampler::new(8);
        let mut v = DVector::zeros(m.dim_g);
        v[m.z.start] = 1.0;
        let g = regular_affine(&m, &mut rng, &v);
        let h = regular_affine(&m, &mut rng, &v);
        let explicit = g.compose(&h);
        let prod = ProductMap::new(&[g, h], &m);
        let a = margulis_invariant(&m, &explicit, 1e-6).unwrap();
        let b = margulis_invariant(&m, &prod, 1e-6).unwrap();
        assert!((a - b).norm() < 1e-8);
    }
}
