//! Concrete realizations of sl(n,R) and so(n,1) with an adapted basis.
//!
//! Basis order of g is [n+ | z | d | n-]; the extended space ĝ appends the
//! origin direction R₀ as its last coordinate.  The first `rank` vectors of
//! the z block span the Cartan subspace a.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Sampler;

const STRUCT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sl,
    SoN1,
}

/// JSON model descriptor `{"family":"sl"|"so_n1","n":int}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub n: usize,
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Parses `sl:N` or `so:N`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, n) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("model must look like sl:N or so:N, got {s:?}")))?;
        let n: usize = n.trim().parse().map_err(|_| Error::InvalidInput(format!("bad model size in {s:?}")))?;
        let family = match fam.trim() {
            "sl" => Family::Sl,
            "so" | "so_n1" => Family::SoN1,
            other => return Err(Error::InvalidInput(format!("unknown family {other:?}"))),
        };
        Ok(Self { family, n })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Sl => write!(f, "sl:{}", self.n),
            Family::SoN1 => write!(f, "so:{}", self.n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LieModel {
    pub spec: ModelSpec,
    pub dim_g: usize,
    /// Defining-representation matrices of the basis of g.
    pub basis: Vec<DMatrix<f64>>,
    pub n_plus: Range<usize>,
    pub z: Range<usize>,
    pub d: Range<usize>,
    pub n_minus: Range<usize>,
    pub a: Range<usize>,
    /// Indices of m = z(m) ⊕ d.
    pub m: Vec<usize>,
    pub w0: DMatrix<f64>,
    /// Fixed interior element of the positive Weyl chamber, in g-coordinates.
    pub v_prime: DVector<f64>,
    /// Invariant form J for so(n,1).
    form: Option<DMatrix<f64>>,
    norms_sq: Vec<f64>,
}

/// Structural residuals of a model, all expected below 1e-9.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub model: ModelSpec,
    pub dim_g: usize,
    pub p: usize,
    pub q: usize,
    pub d: usize,
    pub root_space_residual: f64,
    pub positive_roots_on_v_prime: f64,
    pub centralizer_residual: f64,
    pub bracket_closure_residual: f64,
    pub orthogonality_residual: f64,
    pub killing_on_d_residual: f64,
    pub killing_max_eig_on_m: f64,
    pub d_equals_bracket_m_residual: f64,
    pub w0_residual: f64,
    pub neutral_vector_residual: f64,
    pub pass: bool,
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n);
    e[(i, j)] = 1.0;
    e
}

fn frob_normalized(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.norm();
    m / n
}

impl LieModel {
    pub fn build(spec: ModelSpec) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::UnsupportedModel(format!("{spec}: n must be at least 2")));
        }
        if spec.n > 12 {
            return Err(Error::UnsupportedModel(format!("{spec}: n above 12 is not supported")));
        }
        match spec.family {
            Family::Sl => Ok(Self::build_sl(spec)),
            Family::SoN1 => Self::build_so(spec),
        }
    }

    fn build_sl(spec: ModelSpec) -> Self {
        let n = spec.n;
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                basis.push(unit(n, i, j));
            }
        }
        let np = basis.len();
        for k in 1..n {
            let mut h = DMatrix::zeros(n, n);
            for i in 0..k {
                h[(i, i)] = 1.0;
            }
            h[(k, k)] = -(k as f64);
            basis.push(frob_normalized(h));
        }
        let zr = np..np + n - 1;
        for i in 0..n {
            for j in i + 1..n {
                basis.push(unit(n, j, i));
            }
        }
        let dim_g = basis.len();
        let mut w0 = DMatrix::zeros(n, n);
        for i in 0..n {
            w0[(i, n - 1 - i)] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        if w0.determinant() < 0.0 {
            w0.row_mut(0).neg_mut();
        }
        let mut model = Self {
            spec,
            dim_g,
            basis,
            n_plus: 0..np,
            z: zr.clone(),
            d: zr.end..zr.end,
            n_minus: zr.end..dim_g,
            a: zr.clone(),
            m: Vec::new(),
            w0,
            v_prime: DVector::zeros(dim_g),
            form: None,
            norms_sq: Vec::new(),
        };
        model.norms_sq = model.basis.iter().map(|b| b.norm_squared()).collect();
        let vp = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (n as f64 - 1.0) - 2.0 * i as f64));
        model.v_prime = model.coords(&frob_normalized(vp));
        model
    }

    fn build_so(spec: ModelSpec) -> Result<Self> {
        let n = spec.n;
        let big = n + 1;
        let (s, t) = (n - 1, n); // last spatial axis, time axis
        let mut basis = Vec::new();
        for i in 0..s {
            let mut y = DMatrix::zeros(big, big);
            y[(i, s)] = -1.0;
            y[(i, t)] = 1.0;
            y[(s, i)] = 1.0;
            y[(t, i)] = 1.0;
            basis.push(frob_normalized(y));
        }
        let np = basis.len();
        let x = unit(big, s, t) + unit(big, t, s);
        basis.push(frob_normalized(x));
        let mut m_gens = Vec::new();
        for a in 0..s {
            for b in a + 1..s {
                m_gens.push(unit(big, a, b) - unit(big, b, a));
            }
        }
        // so(2) is abelian and joins z; so(k) with k ≥ 3 is semisimple and forms d
        let m_in_z = s == 2;
        let z_len;
        let d_len;
        if m_in_z {
            basis.extend(m_gens.iter().cloned().map(frob_normalized));
            z_len = 1 + m_gens.len();
            d_len = 0;
        } else {
            z_len = 1;
            d_len = m_gens.len();
            basis.extend(m_gens.iter().cloned().map(frob_normalized));
        }
        for i in 0..s {
            let mut y = DMatrix::zeros(big, big);
            y[(i, s)] = 1.0;
            y[(i, t)] = 1.0;
            y[(s, i)] = -1.0;
            y[(t, i)] = 1.0;
            basis.push(frob_normalized(y));
        }
        let dim_g = basis.len();
        let zr = np..np + z_len;
        let dr = zr.end..zr.end + d_len;
        let mut w0 = DMatrix::identity(big, big);
        w0[(s - 1, s - 1)] = -1.0;
        w0[(s, s)] = -1.0;
        let mut form = DMatrix::identity(big, big);
        form[(t, t)] = -1.0;
        let m: Vec<usize> = (np + 1..dr.end).collect();
        let mut model = Self {
            spec,
            dim_g,
            basis,
            n_plus: 0..np,
            z: zr.clone(),
            d: dr.clone(),
            n_minus: dr.end..dim_g,
            a: np..np + 1,
            m,
            w0,
            v_prime: DVector::zeros(dim_g),
            form: Some(form),
            norms_sq: Vec::new(),
        };
        model.norms_sq = model.basis.iter().map(|b| b.norm_squared()).collect();
        // rescale d so that the gram agrees with minus the Killing form there
        let kill: Vec<f64> = dr.clone().map(|i| model.killing(&model.e(i), &model.e(i))).collect();
        for (i, k) in dr.clone().zip(kill) {
            if k >= 0.0 {
                return Err(Error::UnsupportedModel("Killing form not negative on d".into()));
            }
            model.basis[i] /= (-k).sqrt();
        }
        model.norms_sq = model.basis.iter().map(|b| b.norm_squared()).collect();
        let mut vp = DVector::zeros(dim_g);
        vp[np] = 1.0;
        model.v_prime = vp;
        Ok(model)
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    /// Size of the defining representation.
    pub fn defining_dim(&self) -> usize {
        match self.spec.family {
            Family::Sl => self.spec.n,
            Family::SoN1 => self.spec.n + 1,
        }
    }

    pub fn dim_ghat(&self) -> usize {
        self.dim_g + 1
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn l(&self) -> Range<usize> {
        self.z.start..self.d.end
    }

    pub fn dim_l(&self) -> usize {
        self.l().len()
    }

    /// dim p̂⁺ = dim n⁺ + dim l + 1.
    pub fn p(&self) -> usize {
        self.n_plus.len() + self.dim_l() + 1
    }

    /// dim n⁻.
    pub fn q(&self) -> usize {
        self.n_minus.len()
    }

    pub fn origin_index(&self) -> usize {
        self.dim_g
    }

    /// The invariant bilinear form J of the defining representation (so(n,1)).
    pub fn form(&self) -> Option<&DMatrix<f64>> {
        self.form.as_ref()
    }

    pub fn to_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let nd = self.defining_dim();
        let mut m = DMatrix::zeros(nd, nd);
        for (c, b) in x.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += b * *c;
            }
        }
        m
    }

    /// Coordinates of a defining-representation matrix assumed to lie in g.
    pub fn coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim_g, |k, _| m.dot(&self.basis[k]) / self.norms_sq[k])
    }

    /// Coordinates together with the relative residual of `m` outside g.
    pub fn coords_checked(&self, m: &DMatrix<f64>) -> (DVector<f64>, f64) {
        let c = self.coords(m);
        let back = self.to_matrix(&c);
        let r = (m - back).norm() / m.norm().max(1e-300);
        (c, r)
    }

    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let (mx, my) = (self.to_matrix(x), self.to_matrix(y));
        self.coords(&(&mx * &my - &my * &mx))
    }

    /// Matrix of ad(x) in basis coordinates.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mx = self.to_matrix(x);
        let mut out = DMatrix::zeros(self.dim_g, self.dim_g);
        for k in 0..self.dim_g {
            let b = &self.basis[k];
            out.set_column(k, &self.coords(&(&mx * b - b * &mx)));
        }
        out
    }

    pub fn killing(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (self.ad(x) * self.ad(y)).trace()
    }

    pub fn killing_matrix(&self) -> DMatrix<f64> {
        let ads: Vec<DMatrix<f64>> = (0..self.dim_g).map(|i| self.ad(&self.e(i))).collect();
        DMatrix::from_fn(self.dim_g, self.dim_g, |i, j| (&ads[i] * &ads[j]).trace())
    }

    /// Basis vector `i` of g.
    pub fn e(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g);
        v[i] = 1.0;
        v
    }

    /// Residual of membership of a defining matrix in the group G.
    pub fn group_residual(&self, h: &DMatrix<f64>) -> f64 {
        let nd = self.defining_dim();
        if h.nrows() != nd || h.ncols() != nd {
            return f64::INFINITY;
        }
        let scale = h.norm_squared().max(1.0);
        let det = h.determinant();
        let det_res = (det - 1.0).abs() / scale.powf(nd as f64 / 2.0).max(1.0);
        match &self.form {
            None => det_res,
            Some(j) => {
                let r = (h.transpose() * j * h - j).norm() / scale;
                r.max(det_res)
            }
        }
    }

    pub fn check_group(&self, h: &DMatrix<f64>) -> Result<()> {
        let r = self.group_residual(h);
        if r > 1e-8 {
            return Err(Error::Domain(format!("matrix is not in G (residual {r:.3e})")));
        }
        Ok(())
    }

    /// Ad(h) in basis coordinates.
    pub fn adjoint_matrix(&self, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_group(h)?;
        let hinv = self.group_inverse(h)?;
        Ok(self.adjoint_unchecked(h, &hinv))
    }

    pub(crate) fn adjoint_unchecked(&self, h: &DMatrix<f64>, hinv: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim_g, self.dim_g);
        for k in 0..self.dim_g {
            out.set_column(k, &self.coords(&(h * &self.basis[k] * hinv)));
        }
        out
    }

    /// Inverse of a group element, using the invariant form where available.
    pub fn group_inverse(&self, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.form {
            Some(j) => Ok(j * h.transpose() * j),
            None => h.clone().try_inverse().ok_or_else(|| Error::Domain("singular matrix".into())),
        }
    }

    /// exp of a g-element in the defining representation.
    pub fn exp(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.to_matrix(x).exp()
    }

    /// π_z: projection from l onto z along d, returned in z-coordinates.
    pub fn project_z(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let l = self.l();
        let outside: f64 = (0..self.dim_g).filter(|i| !l.contains(i)).map(|i| x[i] * x[i]).sum::<f64>().sqrt();
        if outside > STRUCT_TOL * x.norm().max(1.0) {
            return Err(Error::Domain(format!("vector not in l (residual {outside:.3e})")));
        }
        Ok(x.rows(self.z.start, self.z.len()).into_owned())
    }

    /// z-coordinates to g-coordinates.
    pub fn embed_z(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g);
        v.rows_mut(self.z.start, self.z.len()).copy_from(z);
        v
    }

    pub fn w0_ad(&self) -> DMatrix<f64> {
        self.adjoint_unchecked(&self.w0, &self.group_inverse(&self.w0).expect("w0 invertible"))
    }

    /// Action of w₀ on z-coordinates.
    pub fn w0_on_z(&self, z: &DVector<f64>) -> DVector<f64> {
        let w = self.w0_ad() * self.embed_z(z);
        w.rows(self.z.start, self.z.len()).into_owned()
    }

    /// v = v′ − w₀(v′), in z-coordinates.
    pub fn neutral_vector(&self) -> DVector<f64> {
        let v = &self.v_prime - self.w0_ad() * &self.v_prime;
        v.rows(self.z.start, self.z.len()).into_owned()
    }

    /// Element of a with the given coordinates, as g-vector.
    pub fn a_element(&self, coeffs: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g);
        for (k, c) in coeffs.iter().enumerate() {
            v[self.a.start + k] = *c;
        }
        v
    }

    /// Values of the restricted roots of the n⁺ basis on an a-element.
    pub fn root_values(&self, a: &DVector<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_plus.len());
        for i in self.n_plus.clone() {
            let y = self.e(i);
            let br = self.bracket(a, &y);
            out.push(br[i]);
        }
        out
    }

    /// Random element of a⁺ whose simple-root values lie in [lo, hi].
    pub fn random_a_plus(&self, rng: &mut Sampler, lo: f64, hi: f64) -> DVector<f64> {
        match self.spec.family {
            Family::Sl => {
                let n = self.spec.n;
                let mut diag = vec![0.0; n];
                for i in 1..n {
                    diag[i] = diag[i - 1] - rng.range(lo, hi);
                }
                let mean = diag.iter().sum::<f64>() / n as f64;
                let m = DMatrix::from_diagonal(&DVector::from_iterator(n, diag.iter().map(|x| x - mean)));
                self.coords(&m)
            }
            Family::SoN1 => {
                let t = rng.range(lo, hi);
                let vp = &self.v_prime;
                let unit_root = self.root_values(vp)[0];
                vp * (t / unit_root)
            }
        }
    }

    /// Random element of m (zero for sl(n)).
    pub fn random_m(&self, rng: &mut Sampler, scale: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim_g);
        for &i in &self.m {
            v[i] = scale * rng.normal();
        }
        v
    }

    /// Random group element exp(X) with X a Gaussian g-vector of the given scale.
    pub fn random_group_element(&self, rng: &mut Sampler, scale: f64) -> DMatrix<f64> {
        let x = rng.normal_vector(self.dim_g) * scale;
        self.exp(&x)
    }

    /// Random element of K (SO(n)) or of M, whose adjoint action is
    /// gram-orthogonal.
    pub fn random_orthogonal_element(&self, rng: &mut Sampler, scale: f64) -> DMatrix<f64> {
        match self.spec.family {
            Family::Sl => {
                let n = self.spec.n;
                let g = rng.normal_matrix(n, n) * scale;
                (&g - g.transpose()).exp()
            }
            Family::SoN1 => self.exp(&self.random_m(rng, scale)),
        }
    }

    /// Quasi-translation test for a matrix acting on l̂ in the basis [z | d | R₀].
    pub fn quasi_translation_residual(&self, m: &DMatrix<f64>) -> f64 {
        let (nz, nd) = (self.z.len(), self.d.len());
        let k = nz + nd + 1;
        if m.nrows() != k || m.ncols() != k {
            return f64::INFINITY;
        }
        let zz = m.view((0, 0), (nz, nz)) - DMatrix::<f64>::identity(nz, nz);
        let zd = m.view((0, nz), (nz, nd)).norm();
        let dz = m.view((nz, 0), (nd, nz)).norm();
        let dd = m.view((nz, nz), (nd, nd)).into_owned();
        let orth = (dd.transpose() * &dd - DMatrix::<f64>::identity(nd, nd)).norm();
        let mut last = m.row(k - 1).into_owned();
        last[k - 1] -= 1.0;
        zz.norm().max(zd).max(dz).max(orth).max(last.norm())
    }

    pub fn is_quasi_translation(&self, m: &DMatrix<f64>, tol: f64) -> bool {
        self.quasi_translation_residual(m) < tol
    }

    /// Row-major defining matrices of the basis of g.
    pub fn basis_export(&self) -> Vec<Vec<Vec<f64>>> {
        self.basis.iter().map(crate::linalg::to_rows).collect()
    }

    pub fn verify(&self) -> StructureReport {
        let dim = self.dim_g;
        let ad_basis: Vec<DMatrix<f64>> = (0..dim).map(|i| self.ad(&self.e(i))).collect();
        let column_outside = |m: &DMatrix<f64>, col: usize, allowed: &dyn Fn(usize) -> bool| -> f64 {
            (0..dim).filter(|&r| !allowed(r)).map(|r| m[(r, col)].powi(2)).sum::<f64>().sqrt()
        };

        let mut root = 0.0f64;
        let mut roots_on_vp = f64::INFINITY;
        for i in self.n_plus.clone() {
            for ai in self.a.clone() {
                let col = ad_basis[ai].column(i).into_owned();
                let alpha = col[i];
                let mut r = col.clone();
                r[i] -= alpha;
                root = root.max(r.norm());
            }
            let col = self.ad(&self.v_prime).column(i).into_owned();
            roots_on_vp = roots_on_vp.min(col[i]);
        }

        let mut central = 0.0f64;
        for ai in self.a.clone() {
            for &mi in &self.m {
                central = central.max(ad_basis[ai].column(mi).norm());
            }
        }

        let l = self.l();
        let np = self.n_plus.clone();
        let nm = self.n_minus.clone();
        let mut closure = 0.0f64;
        for x in l.clone() {
            for y in np.clone() {
                closure = closure.max(column_outside(&ad_basis[x], y, &|r| np.contains(&r)));
            }
            for y in nm.clone() {
                closure = closure.max(column_outside(&ad_basis[x], y, &|r| nm.contains(&r)));
            }
            for y in l.clone() {
                closure = closure.max(column_outside(&ad_basis[x], y, &|r| l.contains(&r)));
            }
        }
        for x in np.clone() {
            for y in np.clone() {
                closure = closure.max(column_outside(&ad_basis[x], y, &|r| np.contains(&r)));
            }
        }

        let mut orth = 0.0f64;
        for i in 0..dim {
            for j in 0..i {
                orth = orth.max(self.basis[i].dot(&self.basis[j]).abs());
            }
        }

        let kill = self.killing_matrix();
        let mut kd = 0.0f64;
        for i in self.d.clone() {
            for j in self.d.clone() {
                let target = if i == j { -1.0 } else { 0.0 };
                kd = kd.max((kill[(i, j)] - target).abs());
            }
        }
        let km = if self.m.is_empty() {
            -1.0
        } else {
            let sub = DMatrix::from_fn(self.m.len(), self.m.len(), |i, j| kill[(self.m[i], self.m[j])]);
            sub.symmetric_eigen().eigenvalues.max()
        };

        // d = [m, m]: brackets of m land in d and span it
        let mut dm = 0.0f64;
        let mut cols = Vec::new();
        for &x in &self.m {
            for &y in &self.m {
                let dset = self.d.clone();
                dm = dm.max(column_outside(&ad_basis[x], y, &|r| dset.contains(&r)));
                cols.push(ad_basis[x].column(y).into_owned());
            }
        }
        let rank = if cols.is_empty() { 0 } else { crate::linalg::orth(&DMatrix::from_columns(&cols), 1e-9).ncols() };
        if rank != self.d.len() {
            dm = dm.max(1.0);
        }

        let w = self.w0_ad();
        let mut w0r = 0.0f64;
        for i in np.clone() {
            w0r = w0r.max(column_outside(&w, i, &|r| nm.contains(&r)));
        }
        for i in l.clone() {
            w0r = w0r.max(column_outside(&w, i, &|r| l.contains(&r)));
        }
        w0r = w0r.max(self.group_residual(&self.w0));

        let v = self.neutral_vector();
        let nv = (self.w0_on_z(&v) + &v).norm() + if v.norm() > 0.1 { 0.0 } else { 1.0 };

        let dsum = (self.q() + self.p() != self.dim_ghat()) as u8 as f64;
        let pass = root < STRUCT_TOL
            && roots_on_vp > 0.0
            && central < STRUCT_TOL
            && closure < STRUCT_TOL
            && orth < STRUCT_TOL
            && kd < STRUCT_TOL
            && km < -STRUCT_TOL
            && dm < STRUCT_TOL
            && w0r < STRUCT_TOL
            && nv < STRUCT_TOL
            && dsum == 0.0;
        StructureReport {
            model: self.spec,
            dim_g: dim,
            p: self.p(),
            q: self.q(),
            d: self.dim_ghat(),
            root_space_residual: root,
            positive_roots_on_v_prime: roots_on_vp,
            centralizer_residual: central,
            bracket_closure_residual: closure,
            orthogonality_residual: orth,
            killing_on_d_residual: kd,
            killing_max_eig_on_m: km,
            d_equals_bracket_m_residual: dm,
            w0_residual: w0r,
            neutral_vector_residual: nv,
            pass,
        }
    }
}

pub fn build_model(family: Family, n: usize) -> Result<LieModel> {
    LieModel::build(ModelSpec { family, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(n: usize) -> LieModel {
        build_model(Family::Sl, n).unwrap()
    }

    fn so(n: usize) -> LieModel {
        build_model(Family::SoN1, n).unwrap()
    }

    #[test]
    fn dimension_counts() {
        let m = sl(2);
        assert_eq!((m.dim_g, m.n_plus.len(), m.a.len(), m.m.len(), m.p(), m.q(), m.dim_ghat()), (3, 1, 1, 0, 3, 1, 4));
        let m = sl(3);
        assert_eq!((m.dim_g, m.n_plus.len() + m.dim_l(), m.p(), m.q(), m.dim_ghat()), (8, 5, 6, 3, 9));
        let m = so(4);
        assert_eq!((m.dim_g, m.dim_l(), m.d.len(), m.n_plus.len()), (10, 4, 3, 3));
        assert_eq!((m.p(), m.q(), m.dim_ghat()), (8, 3, 11));
    }

    #[test]
    fn structure_passes() {
        for spec in ["sl:2", "sl:3", "sl:4", "so:2", "so:3", "so:4", "so:5"] {
            let m = LieModel::build(spec.parse().unwrap()).unwrap();
            let r = m.verify();
            assert!(r.pass, "{spec}: {r:?}");
        }
    }

    #[test]
    fn rejects_small_n() {
        assert!(build_model(Family::Sl, 1).is_err());
        assert!(build_model(Family::SoN1, 0).is_err());
    }

    #[test]
    fn sl2_bracket_h_e() {
        let m = sl(2);
        // H = diag(1,-1) = √2 · basis[1]
        let h = m.e(1) * 2f64.sqrt();
        let e = m.e(0);
        let br = m.bracket(&h, &e);
        assert!((br - e * 2.0).norm() < 1e-12);
        assert!(m.bracket(&h, &h).norm() < 1e-15);
    }

    #[test]
    fn adjoint_of_diagonal_sl2() {
        let m = sl(2);
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let ad = m.adjoint_matrix(&h).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.25]));
        assert!((ad - expected).norm() < 1e-12);
    }

    #[test]
    fn adjoint_identity_and_domain() {
        let m = so(3);
        let id = DMatrix::identity(4, 4);
        assert!((m.adjoint_matrix(&id).unwrap() - DMatrix::<f64>::identity(6, 6)).norm() < 1e-14);
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]));
        assert!(m.adjoint_matrix(&bad).is_err());
    }

    #[test]
    fn w0_flips_sl2() {
        let m = sl(2);
        let w = m.w0_ad();
        // E ↦ −F, H ↦ −H
        assert!((w.column(0) + m.e(2)).norm() < 1e-12);
        assert!((w.column(1) + m.e(1)).norm() < 1e-12);
    }

    #[test]
    fn neutral_vectors() {
        let m = sl(2);
        let h = m.coords(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])));
        // v′ is H normalized, so v = 2v′
        let v = m.neutral_vector();
        let vp = m.v_prime.rows(m.z.start, m.z.len()).into_owned();
        assert!((v - vp * 2.0).norm() < 1e-12);
        assert!((h[1] - 2f64.sqrt()).abs() < 1e-12);
        let m = so(3);
        let v = m.neutral_vector();
        assert!((v[0] - 2.0).abs() < 1e-12 && v.rows(1, v.len() - 1).norm() < 1e-12);
    }

    #[test]
    fn project_z_so4() {
        let m = so(4);
        let mut x = m.e(m.a.start) * 0.7;
        x[m.d.start + 1] = 1.3;
        let z = m.project_z(&x).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - 0.7).abs() < 1e-15);
        assert!(m.project_z(&m.e(0)).is_err());
    }

    #[test]
    fn quasi_translation_predicate() {
        let m = so(4);
        let k = m.dim_l() + 1;
        let mut q = DMatrix::identity(k, k);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        q[(1, 1)] = c;
        q[(1, 2)] = -s;
        q[(2, 1)] = s;
        q[(2, 2)] = c;
        q[(0, k - 1)] = 2.0;
        q[(3, k - 1)] = -1.0;
        assert!(m.is_quasi_translation(&q, 1e-8));
        let mut bad = q.clone();
        bad[(0, 0)] = 1.1;
        assert!(!m.is_quasi_translation(&bad, 1e-8));
        let mut bad = q;
        bad[(1, 0)] = 0.01;
        assert!(!m.is_quasi_translation(&bad, 1e-8));
    }

    #[test]
    fn model_spec_parsing() {
        let s: ModelSpec = "so:4".parse().unwrap();
        assert_eq!(s, ModelSpec { family: Family::SoN1, n: 4 });
        assert_eq!(s.to_string(), "so:4");
        assert!("su:3".parse::<ModelSpec>().is_err());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"family":"so_n1","n":4}"#);
    }
}
