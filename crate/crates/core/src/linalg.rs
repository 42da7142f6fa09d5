//! Dense linear-algebra helpers: spans, intersections, principal angles and
//! ordered complex Schur forms.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex<f64>>;

/// Largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Smallest singular value (of the thin factorization).
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    *singular_values(m).last().expect("non-empty")
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    if m.iter().any(|x| !x.is_finite()) {
        return vec![f64::NAN; m.nrows().min(m.ncols())];
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let mut s = match fm.singular_values() {
        Ok(s) => s,
        Err(_) => m.clone().svd_unordered(false, false).singular_values.iter().copied().collect(),
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Minimum-norm least-squares solution, discarding singular values below
/// `rcond` times the largest.
pub fn lstsq(m: &DMatrix<f64>, y: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let (u, s, v) = sorted_svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let mut coef = u.transpose() * y;
    for (i, c) in coef.iter_mut().enumerate() {
        *c = if s[i] > rcond * top && s[i] > 0.0 { *c / s[i] } else { 0.0 };
    }
    v * coef
}

fn sorted_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = (m.nrows(), m.ncols());
    let k = r.min(c);
    if k == 0 {
        return (DMatrix::zeros(r, 0), Vec::new(), DMatrix::zeros(c, 0));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return (DMatrix::from_element(r, k, f64::NAN), vec![f64::NAN; k], DMatrix::from_element(c, k, f64::NAN));
    }
    let fm = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let Ok(svd) = fm.thin_svd() else {
        return nalgebra_svd(m);
    };
    let sv = svd.S().column_vector();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let s = idx.iter().map(|&i| sv[i]).collect();
    let u = DMatrix::from_fn(r, k, |i, j| svd.U()[(i, idx[j])]);
    let v = DMatrix::from_fn(c, k, |i, j| svd.V()[(i, idx[j])]);
    (u, s, v)
}

fn nalgebra_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = nalgebra::SVD::try_new_unordered(m.clone(), true, true, f64::EPSILON, 0)
        .expect("SVD without an iteration limit");
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), idx.len(), |i, j| u[(i, idx[j])]);
    let v = DMatrix::from_fn(vt.ncols(), idx.len(), |i, j| vt[(idx[j], i)]);
    (u, s, v)
}

/// Singular values in decreasing order with left and right singular vectors.
pub fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    sorted_svd(m)
}

/// Orthonormal basis of the leading `k` left singular directions of `m`.
pub fn leading_left(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (u, _, _) = sorted_svd(m);
    u.columns(0, k).into_owned()
}

/// Orthonormal basis for the column span, rank decided relative to the top
/// singular value.
pub fn orth(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, s, _) = sorted_svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > rel_tol * top && x > 0.0).count();
    u.columns(0, rank).into_owned()
}

/// Right singular vectors for the `k` smallest singular values, together with
/// all singular values in decreasing order (padded to the column count).
pub fn null_space(m: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let c = m.ncols();
    let padded = if m.nrows() < c {
        let mut p = DMatrix::zeros(c, c);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let (_, s, v) = sorted_svd(&padded);
    (v.columns(c - k, k).into_owned(), s)
}

/// Orthonormal basis of span(a) ∩ span(b), both given with orthonormal
/// columns, assuming the intersection has dimension `k`.  Fails when the
/// intersection is not numerically isolated.
pub fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let (p, q) = (a.ncols(), b.ncols());
    if k == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut m = DMatrix::zeros(n, p + q);
    m.columns_mut(0, p).copy_from(a);
    m.columns_mut(p, q).copy_from(&(-b));
    let (nv, s) = null_space(&m, k);
    let len = s.len();
    let inside = s[len - k];
    let outside = if len > k { s[len - k - 1] } else { f64::INFINITY };
    if inside > 1e-8 || outside < 1e-6 {
        return Err(Error::DegeneratePair(format!(
            "intersection of dimension {k} not isolated (sigma_in={inside:.3e}, sigma_out={outside:.3e})"
        )));
    }
    let x = a * nv.rows(0, p);
    Ok(orth(&x, 1e-12))
}

/// Orthogonal projector residual: distance of columns of `v` from span(b).
pub fn span_residual(b: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let r = v - b * (b.transpose() * v);
    op_norm(&r)
}

/// Largest principal angle between two subspaces of equal dimension, given
/// by orthonormal bases.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.ncols(), b.ncols(), "principal angles need equal dimensions");
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = b - a * (a.transpose() * b);
    let s = op_norm(&resid).min(1.0);
    if s < 0.7 {
        s.asin()
    } else {
        sigma_min(&(a.transpose() * b)).clamp(0.0, 1.0).acos()
    }
}

/// Smallest principal angle between subspaces.
pub fn min_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = op_norm(&(a.transpose() * b)).clamp(0.0, 1.0);
    if c < 0.7 {
        c.acos()
    } else {
        // sin of the smallest angle from the null-space side
        let resid = b - a * (a.transpose() * b);
        let (_, s, _) = sorted_svd(&resid);
        let smallest = s.last().copied().unwrap_or(0.0).min(1.0);
        if a.ncols() >= b.ncols() {
            smallest.asin()
        } else {
            c.acos()
        }
    }
}

/// Matrix with orthonormal columns spanning the same space (thin QR).
pub fn qr_q(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex::new(x, 0.0))
}

/// Complex Schur form `a = q t qᴴ`.
pub fn complex_schur(a: &DMatrix<f64>) -> Result<(CMatrix, CMatrix)> {
    let c = complexify(a);
    let n = a.nrows();
    // clustered defective eigenvalues can stall deflation at machine epsilon:
    // relax the threshold, and retry in random orthonormal frames
    for eps in [f64::EPSILON, 1e-14, 1e-13] {
        if let Some(schur) = c.clone().try_schur(eps, 10_000) {
            return Ok(schur.unpack());
        }
        for attempt in 0..2 {
            let mut rng = crate::rng::Sampler::derive(0x7363_6875, attempt);
            let q = complexify(&qr_q(&rng.normal_matrix(n, n)));
            let b = q.adjoint() * &c * &q;
            if let Some(schur) = b.try_schur(eps, 10_000) {
                let (qs, t) = schur.unpack();
                return Ok((q * qs, t));
            }
        }
    }
    Err(Error::NumericalInstability("Schur iteration did not converge".into()))
}

fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let t12 = t[(k, k + 1)];
    let x0 = t12;
    let x1 = t22 - t11;
    let nrm = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (c0, c1) = (x0 / nrm, x1 / nrm);
    // G = [[c0, -conj(c1)], [c1, conj(c0)]], first column the t22-eigenvector.
    let g = [[c0, -c1.conj()], [c1, c0.conj()]];
    // t <- Gᴴ t on rows k, k+1
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = g[0][0].conj() * a + g[1][0].conj() * b;
        t[(k + 1, j)] = g[0][1].conj() * a + g[1][1].conj() * b;
    }
    // t <- t G and q <- q G on columns k, k+1
    for i in 0..n {
        let a = t[(i, k)];
        let b = t[(i, k + 1)];
        t[(i, k)] = a * g[0][0] + b * g[1][0];
        t[(i, k + 1)] = a * g[0][1] + b * g[1][1];
        let a = q[(i, k)];
        let b = q[(i, k + 1)];
        q[(i, k)] = a * g[0][0] + b * g[1][0];
        q[(i, k + 1)] = a * g[0][1] + b * g[1][1];
    }
    t[(k + 1, k)] = Complex::new(0.0, 0.0);
}

/// Reorders a complex Schur form so that the diagonal is sorted by `key`
/// (stable, ascending).  Only eigenvalues with distinct keys are exchanged.
pub fn reorder_schur<F>(q: &mut CMatrix, t: &mut CMatrix, key: F)
where
    F: Fn(Complex<f64>) -> i64,
{
    let n = t.nrows();
    if n < 2 {
        return;
    }
    loop {
        let mut swapped = false;
        for k in 0..n - 1 {
            if key(t[(k + 1, k + 1)]) < key(t[(k, k)]) {
                swap_adjacent(q, t, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Real orthonormal basis of the span of the real and imaginary parts of
/// complex columns spanning a conjugation-invariant subspace of dimension m.
pub fn realify(cols: &CMatrix) -> DMatrix<f64> {
    let (n, m) = (cols.nrows(), cols.ncols());
    if m == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut r = DMatrix::zeros(n, 2 * m);
    for j in 0..m {
        for i in 0..n {
            r[(i, j)] = cols[(i, j)].re;
            r[(i, m + j)] = cols[(i, j)].im;
        }
    }
    leading_left(&r, m)
}

/// Eigenvalues of a real square matrix.  faer's blocked multishift QR can
/// stall in its deflation swaps on highly structured inputs, so the
/// unblocked iteration, which has an iteration cap, is used at every size.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    use faer::diag::Diag;
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::evd::{evd_real, evd_scratch, ComputeEigenvectors, EvdParams};
    use faer::{Auto, Par, Spec};

    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::NumericalInstability("eigenvalues of a non-finite matrix".into()));
    }
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let mut params = <EvdParams as Auto<f64>>::auto();
    params.schur.blocking_threshold = usize::MAX;
    let spec: Spec<EvdParams, f64> = Spec::new(params);
    let req = evd_scratch::<f64>(n, ComputeEigenvectors::No, ComputeEigenvectors::No, Par::Seq, spec);
    let mut buf = MemBuffer::new(req);
    let mut re = Diag::<f64>::zeros(n);
    let mut im = Diag::<f64>::zeros(n);
    evd_real(fm.as_ref(), re.as_mut(), im.as_mut(), None, None, Par::Seq, MemStack::new(&mut buf), spec)
        .map_err(|_| Error::NumericalInstability("eigenvalue iteration did not converge".into()))?;
    Ok((0..n).map(|i| Complex::new(re[i], im[i])).collect())
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = g.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min <= 1e-14 * eig.eigenvalues.max().max(1.0) {
        return Err(Error::NumericalInstability("Gram matrix not positive definite".into()));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Unit vector in the direction of `v`.
pub fn normalized(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v / n
    }
}

/// Least-squares slope, intercept and coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map(|x| x.len()).unwrap_or(0);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize, seed: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| ((i * n + j) as f64 * 0.731 + seed).sin())
    }

    #[test]
    fn reorder_keeps_similarity() {
        let a = test_matrix(7, 0.3);
        let (mut q, mut t) = complex_schur(&a).unwrap();
        reorder_schur(&mut q, &mut t, |z| -(z.norm() * 1e6) as i64);
        let back = &q * &t * q.adjoint();
        let err = (back - complexify(&a)).norm();
        assert!(err < 1e-10, "{err}");
        for i in 0..6 {
            assert!(t[(i, i)].norm() >= t[(i + 1, i + 1)].norm() - 1e-12);
        }
        for i in 1..7 {
            for j in 0..i {
                assert!(t[(i, j)].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn realified_invariant_subspace() {
        let a = test_matrix(6, 1.1);
        let (mut q, mut t) = complex_schur(&a).unwrap();
        reorder_schur(&mut q, &mut t, |z| -(z.norm() * 1e6) as i64);
        // leading block of size 2 closed under conjugation when the top pair is complex or real
        let mods: Vec<f64> = (0..6).map(|i| t[(i, i)].norm()).collect();
        let m = if (mods[0] - mods[1]).abs() < 1e-9 { 2 } else { 1 };
        let b = realify(&q.columns(0, m).into_owned());
        assert!(span_residual(&b, &(&a * &b)) < 1e-9);
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let e = DMatrix::<f64>::identity(4, 4);
        let a = e.columns(0, 3).into_owned();
        let b = e.columns(1, 3).into_owned();
        let x = intersect(&a, &b, 2).unwrap();
        assert_eq!(x.ncols(), 2);
        assert!(x.row(0).norm() < 1e-12 && x.row(3).norm() < 1e-12);
    }

    #[test]
    fn small_angles_are_accurate() {
        let t = 1e-9_f64;
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]);
        assert!((max_principal_angle(&a, &b) - t).abs() < 1e-20);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i, r2) = linear_fit(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12 && (i + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
