//! Exterior powers on ĝ, proximal maps and the projective metric.

pub mod harness;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext_affine::{contraction_strength, Dynamics, ExtAffineMap};
use crate::lie_model::LieModel;
use crate::linalg;
use crate::rng::Sampler;

pub use harness::{product_harness, Bucket, HarnessConfig, HarnessReport, ProductSample};

const INVARIANCE_TOL: f64 = 1e-7;

/// p-subsets of 0..d in lexicographic order: the index order of Λᵖ.
pub fn subsets(d: usize, p: usize) -> Vec<Vec<usize>> {
    (0..d).combinations(p).collect()
}

fn check_power(d: usize, p: usize) -> Result<()> {
    if p == 0 || p > d {
        return Err(Error::Domain(format!("exterior power {p} of a {d}-dimensional space")));
    }
    Ok(())
}

fn minor(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]).determinant()
}

/// Λᵖ(A) by p×p minors, rows and columns indexed by lexicographic subsets.
pub fn exterior_power(a: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::InvalidInput("exterior power of a non-square matrix".into()));
    }
    check_power(d, p)?;
    let idx = subsets(d, p);
    let n = idx.len();
    let mut out = DMatrix::zeros(n, n);
    for (j, cols) in idx.iter().enumerate() {
        for (i, rows) in idx.iter().enumerate() {
            out[(i, j)] = minor(a, rows, cols);
        }
    }
    Ok(out)
}

/// Coordinates of the decomposable vector b₁ ∧ ⋯ ∧ b_p for the columns of `basis`.
pub fn wedge(basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    let (d, p) = (basis.nrows(), basis.ncols());
    check_power(d, p)?;
    let cols: Vec<usize> = (0..p).collect();
    Ok(DVector::from_vec(subsets(d, p).iter().map(|rows| minor(basis, rows, &cols)).collect()))
}

/// Projective distance α(x, y) ∈ [0, π/2] between the lines through x and y.
pub fn projective_angle(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Domain("projective angle of a zero vector".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput("vectors of different lengths".into()));
    }
    let (u, v) = (x / nx, y / ny);
    let c = u.dot(&v);
    let s = (&u - &v * c).norm();
    Ok(s.atan2(c.abs()))
}

/// Top eigenvalue, attracting line, repelling hyperplane and s̃ of a proximal matrix.
#[derive(Debug, Clone)]
pub struct ProximalData {
    pub lambda: f64,
    pub es: DVector<f64>,
    pub eu: DMatrix<f64>,
    pub stilde: f64,
    pub second_modulus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProximalReport {
    pub lambda: f64,
    pub stilde: f64,
    pub second_modulus: f64,
    pub es: Vec<f64>,
}

impl ProximalData {
    pub fn report(&self) -> ProximalReport {
        ProximalReport {
            lambda: self.lambda,
            stilde: self.stilde,
            second_modulus: self.second_modulus,
            es: self.es.iter().copied().collect(),
        }
    }
}

fn fix_sign(v: &mut DVector<f64>) {
    let k = v.iamax();
    if v[k] < 0.0 {
        v.neg_mut();
    }
}

/// `None` when the top-modulus eigenvalue is complex, repeated, or its
/// modulus is within a relative `tol` of the next one.
pub fn proximal_data(gamma: &DMatrix<f64>, tol: f64) -> Result<Option<ProximalData>> {
    let d = gamma.nrows();
    if d == 0 || gamma.ncols() != d {
        return Err(Error::InvalidInput("proximal data needs a non-empty square matrix".into()));
    }
    let mut eig = linalg::eigenvalues(gamma)?;
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let top = eig[0];
    let second = eig.get(1).map(|z| z.norm()).unwrap_or(0.0);
    if top.norm() == 0.0 || top.im.abs() > tol * top.norm() || second >= top.norm() * (1.0 - tol) {
        return Ok(None);
    }
    // E^s is the kernel of γ − λ, E^u the kernel of the left eigenvector
    let shifted = gamma - DMatrix::identity(d, d) * top.re;
    let (_, _, v) = linalg::svd_sorted(&shifted);
    let mut es = v.column(d - 1).into_owned();
    fix_sign(&mut es);
    let (_, _, vl) = linalg::svd_sorted(&shifted.transpose());
    let left = DMatrix::from_row_slice(1, d, vl.column(d - 1).as_slice());
    let eu = linalg::null_space(&left, d - 1).0;

    let lambda = top.re;
    let scale = linalg::op_norm(gamma);
    let r_es = (gamma * &es - &es * lambda).norm() / scale;
    let img = gamma * &eu;
    let r_eu = if d > 1 { (&img - &eu * (eu.transpose() * &img)).norm() / scale } else { 0.0 };
    if r_es.max(r_eu) > INVARIANCE_TOL {
        return Err(Error::NumericalInstability(format!(
            "proximal spaces not invariant (residual {:.2e})",
            r_es.max(r_eu)
        )));
    }
    let stilde = if d > 1 { linalg::op_norm(&img) / lambda.abs() } else { 0.0 };
    Ok(Some(ProximalData { lambda, es, eu, stilde, second_modulus: second }))
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub p: usize,
    pub r_regular: bool,
    pub proximal: bool,
    /// α(E^s, Λᵖ A≥) when both hold.
    pub es_angle: Option<f64>,
    pub s: Option<f64>,
    pub stilde: Option<f64>,
}

/// Compares R-regularity of g with proximality of Λᵖg, p = dim A≥.
pub fn regular_proximal_bridge(model: &LieModel, g: &ExtAffineMap, tol_gap: f64) -> Result<BridgeReport> {
    let p = model.p();
    let lam = exterior_power(&g.hat(), p)?;
    let prox = proximal_data(&lam, tol_gap)?;
    let split = match g.splitting(model, tol_gap) {
        Ok(s) if s.is_regular(model) => Some(s),
        Ok(_) | Err(Error::NotRegular(_)) => None,
        Err(e) => return Err(e),
    };
    let (es_angle, s) = match (&split, &prox) {
        (Some(sp), Some(pd)) => {
            (Some(projective_angle(&pd.es, &wedge(&sp.a_ge)?)?), Some(contraction_strength(model, sp)?))
        }
        (Some(sp), None) => (None, Some(contraction_strength(model, sp)?)),
        _ => (None, None),
    };
    Ok(BridgeReport {
        p,
        r_regular: split.is_some(),
        proximal: prox.is_some(),
        es_angle,
        s,
        stilde: prox.map(|pd| pd.stilde),
    })
}

/// (α^Haus(F₁, F₂), α(ΛᵖF₁, ΛᵖF₂)); errors when α₁ ≤ α₂ ≤ √p·α₁ fails.
pub fn angle_compression_check(f1: &DMatrix<f64>, f2: &DMatrix<f64>) -> Result<(f64, f64)> {
    let a1 = linalg::orth(f1, 1e-12);
    let a2 = linalg::orth(f2, 1e-12);
    let p = a1.ncols();
    if p == 0 || a2.ncols() != p || f1.ncols() != p || f2.ncols() != p {
        return Err(Error::Domain("angle compression needs two subspaces of the same dimension".into()));
    }
    let alpha1 = linalg::max_principal_angle(&a1, &a2);
    let alpha2 = projective_angle(&wedge(&a1)?, &wedge(&a2)?)?;
    if alpha1 > alpha2 + 1e-9 || alpha2 > (p as f64).sqrt() * alpha1 + 1e-9 {
        return Err(Error::PropertyViolation(format!(
            "angle compression fails: α₁ = {alpha1:.12e}, α₂ = {alpha2:.12e}, p = {p}"
        )));
    }
    Ok((alpha1, alpha2))
}

/// Sampling region in the projective space of a proximal map.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", content = "zeta", rename_all = "snake_case")]
pub enum Region {
    /// B(E^s, ζ).
    NearAttracting(f64),
    /// Complement of B(E^u, ζ).
    AwayFromRepelling(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub region: Region,
    pub samples: usize,
    pub empirical: f64,
    pub stilde: f64,
    pub ratio: f64,
    /// Exact bound when E^s ⊥ E^u: s̃(1 + tan²ζ) near E^s, s̃/sin²ζ away from E^u.
    pub orthogonal_bound: f64,
}

fn unit_orthogonal_to(rng: &mut Sampler, basis: &DMatrix<f64>, d: usize) -> DVector<f64> {
    loop {
        let v = rng.normal_vector(d);
        let w = &v - basis * (basis.transpose() * &v);
        let n = w.norm();
        if n > 1e-8 {
            return w / n;
        }
    }
}

fn unit_in(rng: &mut Sampler, basis: &DMatrix<f64>) -> DVector<f64> {
    linalg::normalized(&(basis * rng.normal_vector(basis.ncols())))
}

/// A point of the region, at angle `t`·ζ-range from its centre.
fn region_point(rng: &mut Sampler, pd: &ProximalData, normal: &DVector<f64>, region: Region) -> DVector<f64> {
    let d = pd.es.len();
    match region {
        Region::NearAttracting(zeta) => {
            let es = DMatrix::from_column_slice(d, 1, pd.es.as_slice());
            let w = unit_orthogonal_to(rng, &es, d);
            let phi = zeta * rng.uniform().sqrt();
            &pd.es * phi.cos() + w * phi.sin()
        }
        Region::AwayFromRepelling(zeta) => {
            let u = unit_in(rng, &pd.eu);
            let phi = rng.range(zeta, std::f64::consts::FRAC_PI_2);
            u * phi.cos() + normal * phi.sin()
        }
    }
}

fn in_region(x: &DVector<f64>, pd: &ProximalData, normal: &DVector<f64>, region: Region) -> bool {
    match region {
        Region::NearAttracting(zeta) => projective_angle(x, &pd.es).map(|a| a < zeta).unwrap_or(false),
        Region::AwayFromRepelling(zeta) => (x.dot(normal).abs() / x.norm()).asin() >= zeta,
    }
}

/// Sampled sup of α(γx, γy)/α(x, y) over pairs in the region.  Half the
/// pairs are independent, half are nearby so the local stretch is seen.
pub fn lipschitz_sample(
    gamma: &DMatrix<f64>,
    region: Region,
    n_samples: usize,
    tol: f64,
    rng: &mut Sampler,
) -> Result<LipschitzReport> {
    let pd = proximal_data(gamma, tol)?.ok_or_else(|| Error::Domain("lipschitz_sample needs a proximal map".into()))?;
    let zeta = match region {
        Region::NearAttracting(z) | Region::AwayFromRepelling(z) => z,
    };
    if !(zeta > 0.0 && zeta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain("ζ must lie in (0, π/2)".into()));
    }
    let d = gamma.nrows();
    let normal = unit_orthogonal_to(rng, &pd.eu, d);
    let mut best: f64 = 0.0;
    let mut used = 0;
    for k in 0..n_samples {
        let x = region_point(rng, &pd, &normal, region);
        let y = if k % 2 == 0 {
            region_point(rng, &pd, &normal, region)
        } else {
            let eps = 1e-4 * rng.uniform().max(1e-3);
            let v = unit_orthogonal_to(rng, &DMatrix::from_column_slice(d, 1, x.as_slice()), d);
            let y = &x * eps.cos() + v * eps.sin();
            if !in_region(&y, &pd, &normal, region) {
                continue;
            }
            y
        };
        let a = projective_angle(&x, &y)?;
        if a < 1e-9 {
            continue;
        }
        let b = projective_angle(&(gamma * &x), &(gamma * &y))?;
        best = best.max(b / a);
        used += 1;
    }
    let orthogonal_bound = match region {
        Region::NearAttracting(z) => pd.stilde * (1.0 + z.tan().powi(2)),
        Region::AwayFromRepelling(z) => pd.stilde / z.sin().powi(2),
    };
    Ok(LipschitzReport {
        region,
        samples: used,
        empirical: best,
        stilde: pd.stilde,
        ratio: if pd.stilde > 0.0 { best / pd.stilde } else { f64::INFINITY },
        orthogonal_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_affine::canonize;
    use crate::lie_model::{build_model, Family};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn power_basics() {
        let mut rng = Sampler::new(1);
        let a = rng.normal_matrix(5, 5);
        for p in 1..=5 {
            let id = exterior_power(&DMatrix::identity(5, 5), p).unwrap();
            assert_eq!(id.nrows(), binom(5, p));
            assert!((id.clone() - DMatrix::identity(id.nrows(), id.nrows())).norm() < 1e-15);
        }
        let top = exterior_power(&a, 5).unwrap();
        assert_eq!(top.shape(), (1, 1));
        assert!((top[(0, 0)] - a.determinant()).abs() < 1e-10 * a.determinant().abs().max(1.0));
        assert_eq!(exterior_power(&a, 1).unwrap(), a);
        assert!(exterior_power(&a, 0).is_err());
        assert!(exterior_power(&a, 6).is_err());
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn sl2_power_eigenvalues() {
        let m = build_model(Family::Sl, 2).unwrap();
        let g = ExtAffineMap::linear(&m, &diag(&[2.0, 0.5])).unwrap();
        let lam = exterior_power(&g.hat(), 3).unwrap();
        let mut mods: Vec<f64> = linalg::eigenvalues(&lam).unwrap().iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in mods.iter().zip([4.0, 1.0, 1.0, 0.25]) {
            assert!((x - y).abs() < 1e-12);
        }
        let pd = proximal_data(&lam, 1e-6).unwrap().unwrap();
        assert!((pd.lambda - 4.0).abs() < 1e-12);
        assert!((pd.stilde - 0.25).abs() < 1e-12);
    }

    #[test]
    fn proximal_examples() {
        let pd = proximal_data(&diag(&[3.0, 1.0, 0.5]), 1e-6).unwrap().unwrap();
        assert!((pd.lambda - 3.0).abs() < 1e-14);
        assert!((pd.stilde - 1.0 / 3.0).abs() < 1e-14);
        assert!((pd.es.clone() - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-14);
        let rot = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.1]);
        assert!(proximal_data(&rot, 1e-6).unwrap().is_none());
        assert!(proximal_data(&diag(&[1.0 + 1e-9, 1.0, 1.0]), 1e-6).unwrap().is_none());
        assert!(proximal_data(&diag(&[-2.0, 1.0]), 1e-6).unwrap().unwrap().lambda < 0.0);
    }

    #[test]
    fn projective_angle_examples() {
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert_eq!(projective_angle(&x, &x).unwrap(), 0.0);
        assert_eq!(projective_angle(&x, &(-&x)).unwrap(), 0.0);
        assert!((projective_angle(&x, &y).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!(projective_angle(&x, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn bridge_examples() {
        let m = build_model(Family::Sl, 2).unwrap();
        let r = regular_proximal_bridge(&m, &ExtAffineMap::identity(&m), 1e-6).unwrap();
        assert!(!r.r_regular && !r.proximal);
        let g = ExtAffineMap::linear(&m, &diag(&[2.0, 0.5])).unwrap();
        let r = regular_proximal_bridge(&m, &g, 1e-6).unwrap();
        assert!(r.r_regular && r.proximal);
        assert!(r.es_angle.unwrap() < 1e-12);
        assert!((r.s.unwrap() - 0.25).abs() < 1e-12);
        assert!((r.stilde.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bridge_orthogonalized_equality() {
        let m = build_model(Family::Sl, 3).unwrap();
        let mut rng = Sampler::new(12);
        let mut checked = 0;
        for _ in 0..8 {
            let a = m.random_a_plus(&mut rng, 1.0, 2.0);
            let psi = m.random_group_element(&mut rng, 0.3);
            let h = &psi * m.exp(&a) * m.group_inverse(&psi).unwrap();
            let g = ExtAffineMap::from_defining(&m, &h, rng.normal_vector(m.dim_g) * 0.5).unwrap();
            let phi = canonize(&m, &g, 1e-6).unwrap().phi;
            let g0 = g.conjugate_by(&phi, &m);
            let r = regular_proximal_bridge(&m, &g0, 1e-6).unwrap();
            let (s, st) = (r.s.unwrap(), r.stilde.unwrap());
            if s <= 1.0 {
                assert!((s - st).abs() / s < 1e-6, "{s} vs {st}");
                checked += 1;
            } else {
                assert!(st >= s * (1.0 - 1e-6));
            }
            let r = regular_proximal_bridge(&m, &g, 1e-6).unwrap();
            assert!(r.es_angle.unwrap() < 1e-6);
        }
        assert!(checked >= 4);
    }

    #[test]
    fn angle_compression_examples() {
        let f = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(angle_compression_check(&f, &f).unwrap(), (0.0, 0.0));
        let th: f64 = 0.3;
        let g = DMatrix::from_row_slice(4, 2, &[th.cos(), 0.0, 0.0, 1.0, th.sin(), 0.0, 0.0, 0.0]);
        let (a1, a2) = angle_compression_check(&f, &g).unwrap();
        assert!((a1 - th).abs() < 1e-14 && (a2 - th).abs() < 1e-14);
        let g = DMatrix::from_row_slice(4, 2, &[th.cos(), 0.0, 0.0, th.cos(), th.sin(), 0.0, 0.0, th.sin()]);
        let (a1, a2) = angle_compression_check(&f, &g).unwrap();
        assert!((a1 - th).abs() < 1e-14);
        assert!((a2 - (th.cos().powi(2)).acos()).abs() < 1e-14);
        assert!(a2 <= 2f64.sqrt() * th);
    }

    #[test]
    fn lipschitz_diagonal() {
        let g = diag(&[3.0, 1.0, 0.5]);
        let mut rng = Sampler::new(5);
        let r = lipschitz_sample(&g, Region::NearAttracting(FRAC_PI_4), 4000, 1e-6, &mut rng).unwrap();
        assert!(r.empirical <= r.orthogonal_bound + 1e-9);
        assert!(r.empirical > 0.45 && r.empirical <= 0.6 + 1e-6, "{}", r.empirical);
        let r = lipschitz_sample(&g, Region::NearAttracting(0.01), 2000, 1e-6, &mut rng).unwrap();
        assert!((r.empirical - 1.0 / 3.0).abs() < 1e-3);
        let r = lipschitz_sample(&g, Region::AwayFromRepelling(1.2), 2000, 1e-6, &mut rng).unwrap();
        assert!(r.empirical <= r.orthogonal_bound + 1e-9);
        let near_id = diag(&[1.0 + 1e-9, 1.0, 1.0]);
        assert!(lipschitz_sample(&near_id, Region::NearAttracting(0.1), 10, 1e-6, &mut rng).is_err());
        assert!(lipschitz_sample(&g, Region::NearAttracting(FRAC_PI_2), 10, 1e-6, &mut rng).is_err());
    }
}
