use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::{Dynamics, ExtAffineMap, ProductMap};
use crate::error::{Error, Result};
use crate::lie_model::LieModel;
use crate::linalg;

/// Eigenvalues whose modulus is past the tolerance but within this multiple
/// of it are too close to the unit circle to classify.
const GUARD_FACTOR: f64 = 10.0;
const MAX_SWEEPS: usize = 20_000;
const FLAG_TOL: f64 = 1e-13;
const FLOOR_TOL: f64 = 1e-10;
const FLOOR_SWEEPS: usize = 5;

/// The three dynamical subspaces of a map on ĝ, plus the data needed for
/// stable downstream computations.
#[derive(Debug, Clone)]
pub struct DynamicalSplitting {
    pub vgt: DMatrix<f64>,
    pub aeq: DMatrix<f64>,
    pub vlt: DMatrix<f64>,
    /// Orthonormal basis of A≥ whose leading columns are `vgt`.
    pub a_ge: DMatrix<f64>,
    /// Orthonormal basis of A≤ whose leading columns are `vlt`.
    pub a_le: DMatrix<f64>,
    pub tol_gap: f64,
    /// Eigenvalue moduli in decreasing order (single maps only).
    pub moduli: Vec<f64>,
    /// Action on A≥/V> in the basis given by the trailing columns of `a_ge`.
    pub neutral_block: DMatrix<f64>,
    /// ‖g|V<‖.
    pub norm_on_vlt: f64,
    /// ‖g⁻¹|A≥‖.
    pub inv_norm_on_age: f64,
    pub invariance_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingReport {
    pub dim_vgt: usize,
    pub dim_aeq: usize,
    pub dim_vlt: usize,
    pub tol_gap: f64,
    pub moduli: Vec<f64>,
    pub invariance_residual: f64,
    pub origin_component_of_aeq: f64,
}

impl DynamicalSplitting {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.vgt.ncols(), self.aeq.ncols(), self.vlt.ncols())
    }

    pub fn is_regular(&self, model: &LieModel) -> bool {
        self.aeq.ncols() == model.dim_l() + 1
    }

    pub fn report(&self) -> SplittingReport {
        let last = self.aeq.nrows() - 1;
        SplittingReport {
            dim_vgt: self.vgt.ncols(),
            dim_aeq: self.aeq.ncols(),
            dim_vlt: self.vlt.ncols(),
            tol_gap: self.tol_gap,
            moduli: self.moduli.clone(),
            invariance_residual: self.invariance_residual,
            origin_component_of_aeq: self.aeq.row(last).norm(),
        }
    }
}

fn class_of(z: Complex<f64>, tol: f64) -> i64 {
    let r = z.norm() - 1.0;
    if r > tol {
        0
    } else if r < -tol {
        2
    } else {
        1
    }
}

/// Basis of `outer` whose leading columns are `inner`.
fn nested_basis(inner: &DMatrix<f64>, outer: &DMatrix<f64>) -> DMatrix<f64> {
    let k = outer.ncols() - inner.ncols();
    let comp = outer - inner * (inner.transpose() * outer);
    let extra = linalg::leading_left(&comp, k);
    let mut out = DMatrix::zeros(outer.nrows(), outer.ncols());
    out.columns_mut(0, inner.ncols()).copy_from(inner);
    out.columns_mut(inner.ncols(), k).copy_from(&extra);
    out
}

fn invariance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if b.ncols() == 0 {
        return 0.0;
    }
    let ab = a * b;
    let r = &ab - b * (b.transpose() * &ab);
    r.norm() / a.norm()
}

pub(super) fn schur_splitting(g: &ExtAffineMap, tol_gap: f64) -> Result<DynamicalSplitting> {
    let a = g.hat();
    let d = a.nrows();
    let (q0, t0) = linalg::complex_schur(&a)?;
    let eig: Vec<Complex<f64>> = (0..d).map(|i| t0[(i, i)]).collect();
    for z in &eig {
        let r = (z.norm() - 1.0).abs();
        if r > tol_gap && r <= GUARD_FACTOR * tol_gap {
            return Err(Error::IllConditioned(format!(
                "eigenvalue modulus {:.9} too close to the unit circle for tol_gap {tol_gap:e}",
                z.norm()
            )));
        }
    }
    let ngt = eig.iter().filter(|z| class_of(**z, tol_gap) == 0).count();
    let neq = eig.iter().filter(|z| class_of(**z, tol_gap) == 1).count();
    let nlt = d - ngt - neq;

    let (mut q, mut t) = (q0.clone(), t0.clone());
    linalg::reorder_schur(&mut q, &mut t, |z| class_of(z, tol_gap));
    let vgt = linalg::realify(&q.columns(0, ngt).into_owned());
    let a_ge = nested_basis(&vgt, &linalg::realify(&q.columns(0, ngt + neq).into_owned()));

    let (mut q, mut t) = (q0, t0);
    linalg::reorder_schur(&mut q, &mut t, |z| 2 - class_of(z, tol_gap));
    let vlt = linalg::realify(&q.columns(0, nlt).into_owned());
    let a_le = nested_basis(&vlt, &linalg::realify(&q.columns(0, nlt + neq).into_owned()));

    let aeq = linalg::intersect(&a_ge, &a_le, neq)
        .map_err(|e| Error::IllConditioned(format!("neutral space is not the intersection of A≥ and A≤: {e}")))?;

    let proj = a_ge.transpose() * &a * &a_ge;
    let neutral_block = proj.view((ngt, ngt), (neq, neq)).into_owned();
    let a_inv = g.inverse().hat();
    let norm_on_vlt = linalg::op_norm(&(&a * &vlt));
    let inv_norm_on_age = linalg::op_norm(&(&a_inv * &a_ge));
    let invariance_residual = [&vgt, &aeq, &vlt, &a_ge, &a_le].iter().map(|b| invariance(&a, b)).fold(0.0, f64::max);
    if invariance_residual > 1e-7 {
        return Err(Error::IllConditioned(format!("invariant subspaces inaccurate ({invariance_residual:.2e})")));
    }
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    Ok(DynamicalSplitting {
        vgt,
        aeq,
        vlt,
        a_ge,
        a_le,
        tol_gap,
        moduli,
        neutral_block,
        norm_on_vlt,
        inv_norm_on_age,
        invariance_residual,
    })
}

/// Converged flag (q-dimensional inside p-dimensional) of a product, with
/// the triangular factors of one more sweep.
struct Flag {
    q0: DMatrix<f64>,
    rs: Vec<DMatrix<f64>>,
    s: DMatrix<f64>,
}

fn start_matrix(d: usize, p: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, p, |i, j| ((i * 131 + j * 71) as f64 * 0.618_033_988_7 + 0.3).sin());
    linalg::qr_q(&m)
}

fn flag_iteration<'a, I>(mats: I, d: usize, p: usize, q: usize) -> Result<Flag>
where
    I: Iterator<Item = &'a DMatrix<f64>> + Clone,
{
    let mut qm = start_matrix(d, p);
    let mut converged = false;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for sweep in 0..MAX_SWEEPS {
        let old = qm.clone();
        for h in mats.clone() {
            qm = linalg::qr_q(&(h * &qm));
        }
        let change = linalg::max_principal_angle(&old.columns(0, q).into_owned(), &qm.columns(0, q).into_owned())
            .max(linalg::max_principal_angle(&old, &qm));
        if change < FLAG_TOL {
            converged = true;
            break;
        }
        // rounding floor: geometric convergence sets a new minimum every
        // sweep, rounding noise does not
        if change < best {
            best = change;
            stalled = 0;
        } else if best < FLOOR_TOL {
            stalled += 1;
            if stalled >= FLOOR_SWEEPS {
                converged = true;
                break;
            }
        }
        if sweep + 1 == MAX_SWEEPS {
            break;
        }
    }
    if !converged {
        return Err(Error::NotRegular("dynamical flag iteration did not converge".into()));
    }
    let q_start = qm.clone();
    let mut rs = Vec::new();
    for h in mats {
        let qr = (h * &qm).qr();
        let (qn, r) = (qr.q(), qr.r());
        qm = qn;
        rs.push(r);
    }
    let s = q_start.transpose() * &qm;
    Ok(Flag { q0: q_start, rs, s })
}

fn upper_inverse(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    r.clone()
        .solve_upper_triangular(&DMatrix::identity(r.nrows(), r.ncols()))
        .ok_or_else(|| Error::NumericalInstability("singular triangular factor".into()))
}

/// T⁻¹ restricted to the leading k×k block, T = R_l ⋯ R_1.
fn leading_inverse_product(rs: &[DMatrix<f64>], k: usize) -> Result<DMatrix<f64>> {
    let mut x = DMatrix::identity(k, k);
    for r in rs {
        x *= upper_inverse(&r.view((0, 0), (k, k)).into_owned())?;
    }
    Ok(x)
}

fn trailing_product(rs: &[DMatrix<f64>], from: usize) -> DMatrix<f64> {
    let k = rs[0].nrows() - from;
    let mut x = DMatrix::identity(k, k);
    for r in rs {
        x = r.view((from, from), (k, k)) * x;
    }
    x
}

fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(linalg::eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub(super) fn product_splitting(w: &ProductMap, model: &LieModel, tol_gap: f64) -> Result<DynamicalSplitting> {
    if w.is_empty() {
        return Err(Error::NotRegular("empty product".into()));
    }
    let d = model.dim_ghat();
    let (p, q) = (model.p(), model.q());
    let inv = w.inverse();
    let fwd = flag_iteration(w.application_order(), d, p, q)?;
    let bwd = flag_iteration(inv.application_order(), d, p, q)?;

    // w|V> must expand every direction: spectral radius of its inverse < 1
    let t_inv_qq = leading_inverse_product(&fwd.rs, q)?;
    let s_qq = fwd.s.view((0, 0), (q, q)).into_owned();
    let rho = spectral_radius(&(&t_inv_qq * s_qq.transpose()))?;
    if rho >= 1.0 / (1.0 + tol_gap) {
        return Err(Error::NotRegular(format!("expanding block not expanding (rho={rho:.3e})")));
    }
    let tb_inv_qq = leading_inverse_product(&bwd.rs, q)?;
    let sb_qq = bwd.s.view((0, 0), (q, q)).into_owned();
    let rho_b = spectral_radius(&(&tb_inv_qq * sb_qq.transpose()))?;
    if rho_b >= 1.0 / (1.0 + tol_gap) {
        return Err(Error::NotRegular(format!("contracting block not contracting (rho={rho_b:.3e})")));
    }

    let a_ge = fwd.q0.clone();
    let a_le = bwd.q0.clone();
    let vgt = a_ge.columns(0, q).into_owned();
    let vlt = a_le.columns(0, q).into_owned();
    let aeq = linalg::intersect(&a_ge, &a_le, p - q)
        .map_err(|e| Error::NotRegular(format!("A≥ and A≤ not transverse: {e}")))?;

    let s_nn = fwd.s.view((q, q), (p - q, p - q)).into_owned();
    let neutral_block = s_nn * trailing_product(&fwd.rs, q);
    let neutral_dev = linalg::eigenvalues(&neutral_block)?.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    if neutral_dev > 1e-4 {
        return Err(Error::NotRegular(format!("neutral block not neutral (deviation {neutral_dev:.3e})")));
    }
    let mut t_inv = DMatrix::identity(p, p);
    for r in &fwd.rs {
        t_inv *= upper_inverse(r)?;
    }
    let inv_norm_on_age = linalg::op_norm(&t_inv);
    let norm_on_vlt = linalg::op_norm(&tb_inv_qq);
    // flag drift after the recorded sweep measures invariance
    let drift = |f: &Flag| {
        let moved = &f.q0 * &f.s;
        let lead = linalg::span_residual(&f.q0.columns(0, q).into_owned(), &moved.columns(0, q).into_owned());
        lead.max(linalg::span_residual(&f.q0, &moved))
    };
    let invariance_residual = drift(&fwd).max(drift(&bwd));
    Ok(DynamicalSplitting {
        vgt,
        aeq,
        vlt,
        a_ge,
        a_le,
        tol_gap,
        moduli: Vec::new(),
        neutral_block,
        norm_on_vlt,
        inv_norm_on_age,
        invariance_residual,
    })
}

/// True iff dim A= = dim l + 1.  Ill-conditioned splittings are errors.
pub fn is_r_regular<D: Dynamics + ?Sized>(model: &LieModel, g: &D, tol_gap: f64) -> Result<bool> {
    match g.splitting(model, tol_gap) {
        Ok(s) => Ok(s.is_regular(model)),
        Err(Error::NotRegular(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// s(g) = ‖g|V<‖·‖g⁻¹|A≥‖.
pub fn contraction_strength(model: &LieModel, split: &DynamicalSplitting) -> Result<f64> {
    if !split.is_regular(model) {
        return Err(Error::Domain("contraction strength needs an R-regular map".into()));
    }
    Ok(split.norm_on_vlt * split.inv_norm_on_age)
}

/// Largest principal angle between two subspaces of ĝ of equal dimension.
pub fn hausdorff_angle(f1: &DMatrix<f64>, f2: &DMatrix<f64>) -> Result<f64> {
    let a = linalg::orth(f1, 1e-12);
    let b = linalg::orth(f2, 1e-12);
    if a.ncols() != b.ncols() || a.ncols() == 0 {
        return Err(Error::Domain(format!(
            "hausdorff angle needs equal positive dimensions, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(linalg::max_principal_angle(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_model::{build_model, Family};
    use crate::rng::Sampler;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn identity_and_translation() {
        let m = build_model(Family::Sl, 2).unwrap();
        let id = ExtAffineMap::identity(&m);
        let s = id.splitting(&m, 1e-6).unwrap();
        assert_eq!(s.dims(), (0, 4, 0));
        assert!(!is_r_regular(&m, &id, 1e-6).unwrap());
        let t = ExtAffineMap::translation(&m, DVector::from_vec(vec![1.0, 2.0, -1.0]));
        assert_eq!(t.splitting(&m, 1e-6).unwrap().dims(), (0, 4, 0));
    }

    #[test]
    fn sl2_diagonal() {
        let m = build_model(Family::Sl, 2).unwrap();
        let g = ExtAffineMap::linear(&m, &diag(&[2.0, 0.5])).unwrap();
        let s = g.splitting(&m, 1e-6).unwrap();
        assert_eq!(s.dims(), (1, 2, 1));
        assert!((s.vgt[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((s.vlt[(2, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(s.aeq.row(0).norm() < 1e-12 && s.aeq.row(2).norm() < 1e-12);
        let st = contraction_strength(&m, &s).unwrap();
        assert!((st - 0.25).abs() < 1e-12);
        for n in 1..6 {
            let h = diag(&[2f64.powi(n), 0.5f64.powi(n)]);
            let gn = ExtAffineMap::linear(&m, &h).unwrap();
            let sn = contraction_strength(&m, &gn.splitting(&m, 1e-6).unwrap()).unwrap();
            assert!((sn - 4f64.powi(-n)).abs() < 1e-12 * 4f64.powi(-n).max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn sl3_regularity_examples() {
        let m = build_model(Family::Sl, 3).unwrap();
        let g = ExtAffineMap::linear(&m, &diag(&[4.0, 1.0, 0.25])).unwrap();
        assert!(is_r_regular(&m, &g, 1e-6).unwrap());
        let g = ExtAffineMap::linear(&m, &diag(&[2.0, 2.0, 0.25])).unwrap();
        assert!(!is_r_regular(&m, &g, 1e-6).unwrap());
    }

    #[test]
    fn guard_band_rejected() {
        let m = build_model(Family::Sl, 2).unwrap();
        let e = 1.0 + 3e-6;
        let g = ExtAffineMap::linear(&m, &diag(&[e, 1.0 / e])).unwrap();
        assert!(matches!(g.splitting(&m, 1e-6), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn inverse_swaps_spaces() {
        let m = build_model(Family::SoN1, 3).unwrap();
        let mut rng = Sampler::new(11);
        let a = m.random_a_plus(&mut rng, 0.8, 1.5) + m.random_m(&mut rng, 1.0);
        let psi = m.random_group_element(&mut rng, 0.4);
        let h = &psi * m.exp(&a) * m.group_inverse(&psi).unwrap();
        let g = ExtAffineMap::from_defining(&m, &h, rng.normal_vector(m.dim_g)).unwrap();
        let s = g.splitting(&m, 1e-6).unwrap();
        let si = g.inverse_in(&m).splitting(&m, 1e-6).unwrap();
        assert!(linalg::span_residual(&s.aeq, &si.aeq) < 1e-7);
        assert!(linalg::span_residual(&s.vgt, &si.vlt) < 1e-7);
        assert_eq!(s.vgt.ncols(), s.vlt.ncols());
        assert!(s.is_regular(&m));
        assert!(s.vgt.row(m.dim_g).norm() < 1e-12);
        assert!(s.aeq.row(m.dim_g).norm() > 1e-3);
    }

    #[test]
    fn product_route_matches_schur_route() {
        let m = build_model(Family::SoN1, 4).unwrap();
        let mut rng = Sampler::new(21);
        let mut maps = Vec::new();
        for _ in 0..2 {
            let a = m.random_a_plus(&mut rng, 1.5, 2.0) + m.random_m(&mut rng, 1.0);
            let psi = m.random_group_element(&mut rng, 0.3);
            let h = &psi * m.exp(&a) * m.group_inverse(&psi).unwrap();
            maps.push(ExtAffineMap::from_defining(&m, &h, rng.normal_vector(m.dim_g)).unwrap());
        }
        let prod = ProductMap::new(&maps, &m);
        let explicit = maps[0].compose(&maps[1]);
        let a = prod.splitting(&m, 1e-6).unwrap();
        let b = explicit.splitting(&m, 1e-6).unwrap();
        assert!(linalg::span_residual(&a.a_ge, &b.a_ge) < 1e-8);
        assert!(linalg::span_residual(&a.a_le, &b.a_le) < 1e-8);
        assert!(linalg::span_residual(&a.vgt, &b.vgt) < 1e-8);
        assert!(linalg::span_residual(&a.aeq, &b.aeq) < 1e-8);
        let (sa, sb) = (contraction_strength(&m, &a).unwrap(), contraction_strength(&m, &b).unwrap());
        assert!((sa - sb).abs() < 1e-8 * sb, "{sa} {sb}");
    }

    #[test]
    fn hausdorff_examples() {
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let diag = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(hausdorff_angle(&e1, &e1).unwrap().abs() < 1e-15);
        assert!((hausdorff_angle(&e1, &e2).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((hausdorff_angle(&e1, &diag).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!(hausdorff_angle(&e1, &DMatrix::identity(2, 2)).is_err());
    }
}
