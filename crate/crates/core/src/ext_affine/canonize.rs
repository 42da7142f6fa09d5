use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DynamicalSplitting, Dynamics, ExtAffineMap};
use crate::error::{Error, Result};
use crate::lie_model::{Family, LieModel};
use crate::linalg;
use crate::rng::Sampler;

const POLISH_ITERATIONS: usize = 50;
const IMAGE_TOL: f64 = 1e-7;
const WITNESS_SEED: u64 = 0x6d61_7267;

/// A map φ ∈ G⋉g with φ(A₁, A₂) = (p̂⁺, p̂⁻).
#[derive(Debug, Clone)]
pub struct Canonizer {
    pub phi: ExtAffineMap,
    /// max(‖φ‖, ‖φ⁻¹‖) on ĝ.
    pub c_bound: f64,
    /// Largest image residual checked when the canonizer was built.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonizerReport {
    pub c_bound: f64,
    pub residual: f64,
    pub defining: Option<Vec<Vec<f64>>>,
    pub translation: Vec<f64>,
}

impl Canonizer {
    pub fn report(&self) -> CanonizerReport {
        CanonizerReport {
            c_bound: self.c_bound,
            residual: self.residual,
            defining: self.phi.defining.as_ref().map(linalg::to_rows),
            translation: self.phi.trans.iter().copied().collect(),
        }
    }
}

/// A group element P with Ad(P⁻¹)(V≥, V≤) = (p⁺, p⁻).
#[derive(Debug, Clone)]
pub struct LinearCanonizer {
    pub p: DMatrix<f64>,
    pub p_inv: DMatrix<f64>,
    /// Ad(P⁻¹).
    pub ad_inv: DMatrix<f64>,
    pub residual: f64,
}

fn rows_norm(m: &DMatrix<f64>, rows: std::ops::Range<usize>) -> f64 {
    m.rows(rows.start, rows.len()).norm()
}

/// Relative size of the rows of `img` outside the allowed set, per column.
fn outside_residual(img: &DMatrix<f64>, forbidden: &[std::ops::Range<usize>]) -> f64 {
    let basis = linalg::orth(img, 1e-12);
    forbidden.iter().map(|r| rows_norm(&basis, r.clone())).fold(0.0, f64::max)
}

/// Basis of A ∩ g for an affine subspace A ⊄ g, in g-coordinates.
pub(crate) fn linear_part_of(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let a = linalg::orth(a, 1e-12);
    let last = a.row(d - 1).into_owned();
    if last.norm() < 1e-12 {
        return Err(Error::Domain("subspace lies inside g, not an affine m.p.a.".into()));
    }
    let (n, _) = linalg::null_space(&DMatrix::from_row_slice(1, a.ncols(), last.as_slice()), a.ncols() - 1);
    let v = &a * n;
    Ok(linalg::orth(&v.rows(0, d - 1).into_owned(), 1e-12))
}

fn generic_element(model: &LieModel, veq: &DMatrix<f64>, variant: u64) -> DMatrix<f64> {
    let mut rng = Sampler::derive(WITNESS_SEED, variant);
    let c = rng.normal_vector(veq.ncols());
    model.to_matrix(&(veq * c))
}

fn sl_canonizer(model: &LieModel, y: &DMatrix<f64>, v_ge: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = model.defining_dim();
    let eig = linalg::eigenvalues(y)?;
    let scale = y.norm().max(1e-300);
    if eig.iter().any(|z| z.im.abs() > 1e-8 * scale) {
        return Err(Error::NotRegular("neutral element has non-real eigenvalues".into()));
    }
    let mut lams: Vec<f64> = eig.iter().map(|z| z.re).collect();
    lams.sort_by(|a, b| a.total_cmp(b));
    if lams.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-8 * scale) {
        return Err(Error::NotRegular("neutral element has repeated eigenvalues".into()));
    }
    let mut vecs = Vec::with_capacity(n);
    for &l in &lams {
        let shifted = y - DMatrix::identity(n, n) * l;
        let (v, _) = linalg::null_space(&shifted, 1);
        let mut v = v.column(0).into_owned();
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        vecs.push(v);
    }
    let p0 = DMatrix::from_columns(&vecs);
    let p0_inv =
        p0.clone().try_inverse().ok_or_else(|| Error::NumericalInstability("eigenvector matrix singular".into()))?;
    // a precedes b iff the elementary matrix e_a f_bᵀ lies in V≥
    let resid = |a: usize, b: usize| {
        let e = &vecs[a] * p0_inv.row(b);
        let c = model.coords(&e);
        let c = &c / c.norm();
        (&c - v_ge * (v_ge.transpose() * &c)).norm()
    };
    let mut wins = vec![0usize; n];
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let (rab, rba) = (resid(a, b), resid(b, a));
            worst = worst.max(rab.min(rba));
            if rab < rba {
                wins[a] += 1;
            } else {
                wins[b] += 1;
            }
        }
    }
    let mut sorted = wins.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() || worst > 1e-5 {
        return Err(Error::DegeneratePair(format!("eigenline order is inconsistent (residual {worst:.2e})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| wins[b].cmp(&wins[a]));
    let mut p = DMatrix::from_fn(n, n, |i, j| vecs[order[j]][i]);
    let det = p.determinant();
    if det < 0.0 {
        p.column_mut(n - 1).neg_mut();
    }
    let det = p.determinant();
    Ok(p / det.powf(1.0 / n as f64))
}

fn so_canonizer(model: &LieModel, y: &DMatrix<f64>, v_ge: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let big = model.defining_dim();
    let j = model.form().expect("so(n,1) has a form").clone();
    let bform = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * &j * y)[(0, 0)];
    let eig = linalg::eigenvalues(y)?;
    let scale = y.norm().max(1e-300);
    let mut idx: Vec<usize> = (0..eig.len()).collect();
    idx.sort_by(|&a, &b| eig[b].re.abs().total_cmp(&eig[a].re.abs()));
    let (l1, l2) = (eig[idx[0]], eig[idx[1]]);
    if l1.re.abs() < 1e-8 * scale || l1.im.abs() > 1e-8 * scale || l2.im.abs() > 1e-8 * scale {
        return Err(Error::NotRegular("neutral element has no real hyperbolic part".into()));
    }
    let eigvec = |l: f64| {
        let (v, _) = linalg::null_space(&(y - DMatrix::identity(big, big) * l), 1);
        v.column(0).into_owned()
    };
    let (c1, c2) = (eigvec(l1.re), eigvec(l2.re));
    // u₊ is the isotropic line fixed by V≥
    let stab_resid = |u: &DVector<f64>| {
        let mut worst: f64 = 0.0;
        for k in 0..v_ge.ncols() {
            let z = model.to_matrix(&v_ge.column(k).into_owned());
            let zu = &z * u;
            let along = u * (u.dot(&zu) / u.norm_squared());
            worst = worst.max((zu - along).norm() / z.norm().max(1e-300));
        }
        worst
    };
    let (r1, r2) = (stab_resid(&c1), stab_resid(&c2));
    let (mut up, mut um) = if r1 < r2 { (c1, c2) } else { (c2, c1) };
    if r1.min(r2) > 1e-6 {
        return Err(Error::DegeneratePair(format!("no isotropic line fixed by V≥ (residual {:.2e})", r1.min(r2))));
    }
    let t = big - 1;
    if up[t] < 0.0 {
        up = -up;
    }
    up *= 2f64.sqrt() / up.norm();
    let b = bform(&up, &um);
    if b.abs() < 1e-12 {
        return Err(Error::DegeneratePair("isotropic lines are not transverse".into()));
    }
    um *= 2.0 / b;
    let nsp = big - 2;
    let proj = |e: DVector<f64>| {
        let a = bform(&e, &um) / 2.0;
        let bb = bform(&e, &up) / 2.0;
        &e - &up * a - &um * bb
    };
    let mut w = DMatrix::from_columns(
        &(0..nsp).map(|i| proj(DVector::from_fn(big, |r, _| (r == i) as u8 as f64))).collect::<Vec<_>>(),
    );
    let gram = w.transpose() * &j * &w;
    w = match linalg::inv_sqrt_spd(&gram) {
        Ok(s) => &w * s,
        Err(_) => {
            let all = DMatrix::from_columns(
                &(0..big).map(|i| proj(DVector::from_fn(big, |r, _| (r == i) as u8 as f64))).collect::<Vec<_>>(),
            );
            let span = linalg::leading_left(&all, nsp);
            let g = span.transpose() * &j * &span;
            &span * linalg::inv_sqrt_spd(&g)?
        }
    };
    let mut p = DMatrix::zeros(big, big);
    p.columns_mut(0, nsp).copy_from(&w);
    p.set_column(nsp, &((&up + &um) / 2.0));
    p.set_column(nsp + 1, &((&up - &um) / 2.0));
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    Ok(p)
}

/// Linear canonizer from V≥ and V≤ (orthonormal bases in g-coordinates).
/// Different `variant`s use different generic neutral elements.
pub fn linear_canonizer(
    model: &LieModel,
    v_ge: &DMatrix<f64>,
    v_le: &DMatrix<f64>,
    variant: u64,
) -> Result<LinearCanonizer> {
    let veq = linalg::intersect(v_ge, v_le, model.dim_l())
        .map_err(|e| Error::DegeneratePair(format!("V≥ and V≤ not transverse: {e}")))?;
    let y = generic_element(model, &veq, variant);
    let p = match model.family() {
        Family::Sl => sl_canonizer(model, &y, v_ge)?,
        Family::SoN1 => so_canonizer(model, &y, v_ge)?,
    };
    let p_inv = model.group_inverse(&p)?;
    let g_res = model.group_residual(&p);
    if g_res > 1e-8 {
        return Err(Error::NumericalInstability(format!("canonizer left the group ({g_res:.2e})")));
    }
    let ad_inv = model.adjoint_unchecked(&p_inv, &p);
    let r1 = outside_residual(&(&ad_inv * v_ge), std::slice::from_ref(&model.n_minus));
    let r2 = outside_residual(&(&ad_inv * v_le), std::slice::from_ref(&model.n_plus));
    let residual = r1.max(r2);
    if residual > 1e-6 {
        return Err(Error::NumericalInstability(format!("linear canonizer residual {residual:.2e}")));
    }
    Ok(LinearCanonizer { p, p_inv, ad_inv, residual })
}

fn bound_of(lin: &DMatrix<f64>, trans: &DVector<f64>, lin_inv: &DMatrix<f64>) -> f64 {
    let n = lin.nrows();
    let mut f = DMatrix::zeros(n + 1, n + 1);
    f.view_mut((0, 0), (n, n)).copy_from(lin);
    f.view_mut((0, n), (n, 1)).copy_from(trans);
    f[(n, n)] = 1.0;
    let mut g = DMatrix::zeros(n + 1, n + 1);
    g.view_mut((0, 0), (n, n)).copy_from(lin_inv);
    g.view_mut((0, n), (n, 1)).copy_from(&(-(lin_inv * trans)));
    g[(n, n)] = 1.0;
    linalg::op_norm(&f).max(linalg::op_norm(&g))
}

/// Coordinate-descent polish over a-rescalings and z-translations.
fn polish(model: &LieModel, lc: &LinearCanonizer, c0: &DVector<f64>) -> (DVector<f64>, DVector<f64>, f64) {
    let rank = model.rank();
    let nz = model.z.len();
    let dim = model.dim_g;
    // Ad(exp α) is diagonal in the root basis
    let roots: Vec<DVector<f64>> = model.a.clone().map(|k| model.ad(&model.e(k)).diagonal()).collect();
    let lin_inv = model.adjoint_unchecked(&lc.p, &lc.p_inv);
    let eval = |x: &[f64]| -> f64 {
        let mut expo = DVector::zeros(dim);
        for k in 0..rank {
            expo += &roots[k] * x[k];
        }
        let dg = expo.map(f64::exp);
        let dinv = expo.map(|t| (-t).exp());
        let lin = DMatrix::from_diagonal(&dg) * &lc.ad_inv;
        let linv = &lin_inv * DMatrix::from_diagonal(&dinv);
        let mut trans = c0.component_mul(&dg);
        for k in 0..nz {
            trans[model.z.start + k] += x[rank + k];
        }
        bound_of(&lin, &trans, &linv)
    };
    let nvar = rank + nz;
    let mut x = vec![0.0; nvar];
    let mut best = eval(&x);
    let mut step = vec![0.5; nvar];
    for _ in 0..POLISH_ITERATIONS {
        let mut improved = false;
        for k in 0..nvar {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += dir * step[k];
                let v = eval(&y);
                if v < best - 1e-15 {
                    best = v;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step.iter().all(|s| *s < 1e-9) {
                break;
            }
        }
    }
    let alpha = DVector::from_fn(rank, |k, _| x[k]);
    let beta = DVector::from_fn(nz, |k, _| x[rank + k]);
    (alpha, beta, best)
}

/// φ with φ(A₁, A₂) = (p̂⁺, p̂⁻) for transverse affine m.p.a.'s.
pub fn pair_canonize(model: &LieModel, a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> Result<Canonizer> {
    let d = model.dim_ghat();
    let a1 = linalg::orth(a1, 1e-12);
    let a2 = linalg::orth(a2, 1e-12);
    if a1.nrows() != d || a1.ncols() != model.p() || a2.ncols() != model.p() {
        return Err(Error::Domain(format!("affine m.p.a.'s have dimension {}", model.p())));
    }
    let x_space = linalg::intersect(&a1, &a2, model.dim_l() + 1)
        .map_err(|e| Error::DegeneratePair(format!("not transverse: {e}")))?;
    let v1 = linear_part_of(&a1)?;
    let v2 = linear_part_of(&a2)?;
    let lc = linear_canonizer(model, &v1, &v2, 0)?;
    let last = x_space.row(d - 1).into_owned();
    if last.norm() < 1e-9 {
        return Err(Error::DegeneratePair("intersection does not meet the affine chart".into()));
    }
    let coeff = last.transpose() / last.norm_squared();
    let xhat = &x_space * coeff;
    let x = xhat.rows(0, model.dim_g) / xhat[d - 1];
    let c0 = -(&lc.ad_inv * x);
    let (alpha, beta, c_bound) = polish(model, &lc, &c0);

    let ea = model.exp(&model.a_element(alpha.as_slice()));
    let defining = &ea * &lc.p_inv;
    let lin = model.adjoint_unchecked(&defining, &(&lc.p * model.group_inverse(&ea)?));
    let mut trans = model.adjoint_unchecked(&ea, &model.group_inverse(&ea)?) * &c0;
    for k in 0..model.z.len() {
        trans[model.z.start + k] += beta[k];
    }
    let phi = ExtAffineMap { lin, trans, defining: Some(defining) };
    let hat = phi.hat();
    let r1 = outside_residual(&(&hat * &a1), std::slice::from_ref(&model.n_minus));
    let r2 = outside_residual(&(&hat * &a2), std::slice::from_ref(&model.n_plus));
    let residual = r1.max(r2);
    if residual > IMAGE_TOL {
        return Err(Error::NumericalInstability(format!("canonizer image residual {residual:.2e}")));
    }
    Ok(Canonizer { phi, c_bound: c_bound.max(1.0), residual })
}

/// Largest canonizer bound over the pairs (A≥ₓ, A≤ᵧ) for x, y ∈ {g, h}.
pub fn pair_bound(model: &LieModel, g: &DynamicalSplitting, h: &DynamicalSplitting) -> Result<f64> {
    let mut c: f64 = 1.0;
    for x in [g, h] {
        for y in [g, h] {
            c = c.max(pair_canonize(model, &x.a_ge, &y.a_le)?.c_bound);
        }
    }
    Ok(c)
}

/// Canonizer of an R-regular map, with the finer image checks
/// φ(V>) = n⁺, φ(V<) = n⁻, φ(A=) = l̂.
pub fn canonize<D: Dynamics + ?Sized>(model: &LieModel, g: &D, tol_gap: f64) -> Result<Canonizer> {
    let split = g.splitting(model, tol_gap)?;
    if !split.is_regular(model) {
        return Err(Error::Domain("canonize needs an R-regular map".into()));
    }
    let mut can = pair_canonize(model, &split.a_ge, &split.a_le)?;
    let hat = can.phi.hat();
    let l = model.l();
    let origin = model.origin_index()..model.origin_index() + 1;
    let r_gt = outside_residual(&(&hat * &split.vgt), &[l.clone(), model.n_minus.clone(), origin.clone()]);
    let r_lt = outside_residual(&(&hat * &split.vlt), &[l, model.n_plus.clone(), origin]);
    let r_eq = outside_residual(&(&hat * &split.aeq), &[model.n_plus.clone(), model.n_minus.clone()]);
    let residual = r_gt.max(r_lt).max(r_eq);
    if residual > IMAGE_TOL {
        return Err(Error::NumericalInstability(format!("canonizer does not split the dynamics ({residual:.2e})")));
    }
    can.residual = can.residual.max(residual);
    Ok(can)
}

/// Matrix on l̂ (basis [z | d | R₀]) of φ′ ∘ ψ ∘ φ⁻¹, where φ, φ′ canonize
/// (p̂₁, p̂₂) and (p̂₁, p̂₂′) and ψ projects p̂₁∩p̂₂ onto p̂₁∩p̂₂′ along the
/// nilradical of p̂₁.
pub fn projections_commute_composite(
    model: &LieModel,
    p1: &DMatrix<f64>,
    p2: &DMatrix<f64>,
    p2b: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, f64)> {
    let phi = pair_canonize(model, p1, p2)?;
    let phib = pair_canonize(model, p1, p2b)?;
    let phi_inv = phi.phi.inverse_in(model).hat();
    let phib_hat = phib.phi.hat();
    let nil = &phi_inv.columns(model.n_plus.start, model.n_plus.len()).into_owned();
    let x2b = linalg::intersect(&linalg::orth(p1, 1e-12), &linalg::orth(p2b, 1e-12), model.dim_l() + 1)?;
    let k = model.dim_l() + 1;
    let mut system = DMatrix::zeros(model.dim_ghat(), nil.ncols() + k);
    system.columns_mut(0, nil.ncols()).copy_from(nil);
    system.columns_mut(nil.ncols(), k).copy_from(&x2b);
    let mut lhat: Vec<usize> = model.l().collect();
    lhat.push(model.origin_index());
    let mut out = DMatrix::zeros(k, k);
    let mut leak: f64 = 0.0;
    for (col, &idx) in lhat.iter().enumerate() {
        let y = phi_inv.column(idx).into_owned();
        let sol = linalg::lstsq(&system, &y, 1e-12);
        let fit = (&system * &sol - &y).norm() / y.norm().max(1.0);
        leak = leak.max(fit);
        let z = &x2b * sol.rows(nil.ncols(), k);
        let img = &phib_hat * z;
        for (row, &jdx) in lhat.iter().enumerate() {
            out[(row, col)] = img[jdx];
        }
        let outside: f64 =
            model.n_plus.clone().chain(model.n_minus.clone()).map(|i| img[i] * img[i]).sum::<f64>().sqrt();
        leak = leak.max(outside / img.norm().max(1.0));
    }
    Ok((out, leak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext_affine::{contraction_strength, DynamicalSplitting};
    use crate::lie_model::build_model;

    fn p_hat(model: &LieModel, plus: bool) -> DMatrix<f64> {
        let d = model.dim_ghat();
        let mut cols: Vec<usize> =
            if plus { (0..model.d.end).collect() } else { (model.z.start..model.dim_g).collect() };
        cols.push(model.origin_index());
        DMatrix::from_fn(d, cols.len(), |i, j| (i == cols[j]) as u8 as f64)
    }

    fn random_affine(model: &LieModel, rng: &mut Sampler, scale: f64) -> ExtAffineMap {
        let h = model.random_group_element(rng, scale);
        ExtAffineMap::from_defining(model, &h, rng.normal_vector(model.dim_g) * scale).unwrap()
    }

    #[test]
    fn standard_pair_is_identity() {
        for spec in ["sl:2", "sl:3", "so:3", "so:4"] {
            let m = LieModel::build(spec.parse().unwrap()).unwrap();
            let c = pair_canonize(&m, &p_hat(&m, true), &p_hat(&m, false)).unwrap();
            assert!((c.c_bound - 1.0).abs() < 1e-12, "{spec}: {}", c.c_bound);
            assert!((c.phi.hat() - DMatrix::<f64>::identity(m.dim_ghat(), m.dim_ghat())).norm() < 1e-10, "{spec}");
        }
    }

    #[test]
    fn flipped_pair() {
        let m = build_model(Family::Sl, 3).unwrap();
        let c = pair_canonize(&m, &p_hat(&m, false), &p_hat(&m, true)).unwrap();
        assert!(c.residual < 1e-9);
        let w = ExtAffineMap::linear(&m, &m.w0).unwrap();
        assert!(c.c_bound <= linalg::op_norm(&w.hat()) + 1e-9);
    }

    #[test]
    fn conjugated_pair_bound() {
        for spec in ["sl:2", "sl:3", "so:4"] {
            let m = LieModel::build(spec.parse().unwrap()).unwrap();
            let mut rng = Sampler::new(17);
            for _ in 0..5 {
                let psi = random_affine(&m, &mut rng, 0.4);
                let h = psi.hat();
                let a1 = &h * p_hat(&m, true);
                let a2 = &h * p_hat(&m, false);
                let c = pair_canonize(&m, &a1, &a2).unwrap();
                let bound = linalg::op_norm(&h) * linalg::op_norm(&psi.inverse_in(&m).hat());
                assert!(c.c_bound <= bound + 1e-6, "{spec}: {} > {}", c.c_bound, bound);
            }
        }
    }

    #[test]
    fn canonical_map_has_identity_canonizer() {
        let m = build_model(Family::Sl, 2).unwrap();
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let g = ExtAffineMap::from_defining(&m, &h, m.e(1) * 0.7).unwrap();
        let c = canonize(&m, &g, 1e-6).unwrap();
        assert!((c.c_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn translation_off_l_is_removed() {
        let m = build_model(Family::SoN1, 4).unwrap();
        let a = m.v_prime.clone() * 1.2;
        let h = m.exp(&a);
        let g = ExtAffineMap::from_defining(&m, &h, m.e(0) * 1.5 + m.e(m.d.start) * 0.3).unwrap();
        let c = canonize(&m, &g, 1e-6).unwrap();
        let conj = c.phi.compose(&g).compose(&c.phi.inverse_in(&m));
        let mut idx: Vec<usize> = m.l().collect();
        idx.push(m.origin_index());
        let hat = conj.hat();
        let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| hat[(idx[i], idx[j])]);
        assert!(m.is_quasi_translation(&block, 1e-8), "{}", m.quasi_translation_residual(&block));
    }

    #[test]
    fn affine_contraction_dominates_linear() {
        let m = build_model(Family::Sl, 3).unwrap();
        let mut rng = Sampler::new(4);
        for _ in 0..10 {
            let a = m.random_a_plus(&mut rng, 0.5, 1.5);
            let psi = m.random_group_element(&mut rng, 0.3);
            let h = &psi * m.exp(&a) * m.group_inverse(&psi).unwrap();
            let g = ExtAffineMap::from_defining(&m, &h, rng.normal_vector(8)).unwrap();
            let s: DynamicalSplitting = g.splitting(&m, 1e-6).unwrap();
            let sl: DynamicalSplitting = g.linear_part().splitting(&m, 1e-6).unwrap();
            assert!(contraction_strength(&m, &sl).unwrap() <= contraction_strength(&m, &s).unwrap() * (1.0 + 1e-9));
        }
    }
}
