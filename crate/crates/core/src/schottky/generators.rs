//! Generator families with equal Margulis invariants, the empirical
//! additivity constant and the hypothesis checks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::word::{Letter, Word};
use crate::error::{Error, Result};
use crate::ext_affine::{
    contraction_strength, margulis_of_splitting, pair_canonize, Canonizer, CanonizerReport, DynamicalSplitting,
    Dynamics, ExtAffineMap, MapJson, ProductMap,
};
use crate::lie_model::{LieModel, ModelSpec};
use crate::linalg;
use crate::par::{self, Execution};
use crate::rng::Sampler;

/// Tolerance of the equal-invariant hypothesis.
pub const H4_TOL: f64 = 1e-6;
/// Relative tolerance for g·g⁻¹ = 1 and rootᴺ = g on loaded generators.
const MATCH_TOL: f64 = 1e-6;
const MU_SEED_STREAM: u64 = 0x6d75;

/// A generator g = fᴺ with independently computed inverses.  Words are
/// evaluated as products of the root factors f^{±1}, which are far better
/// conditioned than g when N is large.
#[derive(Debug, Clone)]
pub struct Generator {
    pub fwd: ExtAffineMap,
    pub inv: ExtAffineMap,
    pub root: ExtAffineMap,
    pub root_inv: ExtAffineMap,
    pub power: usize,
}

impl Generator {
    pub fn new(model: &LieModel, g: ExtAffineMap) -> Self {
        let inv = g.inverse_in(model);
        Self { root: g.clone(), root_inv: inv.clone(), fwd: g, inv, power: 1 }
    }

    fn pair(&self, inverse: bool) -> (&ExtAffineMap, &ExtAffineMap) {
        if inverse {
            (&self.inv, &self.fwd)
        } else {
            (&self.fwd, &self.inv)
        }
    }

    fn root_pair(&self, inverse: bool) -> (&ExtAffineMap, &ExtAffineMap) {
        if inverse {
            (&self.root_inv, &self.root)
        } else {
            (&self.root, &self.root_inv)
        }
    }

    pub fn to_json(&self) -> GeneratorJson {
        let root = (self.power > 1).then(|| self.root.to_json());
        GeneratorJson { forward: self.fwd.to_json(), inverse: Some(self.inv.to_json()), root, root_power: self.power }
    }
}

/// `forward` is the generator; when `root` is present the generator equals
/// root^root_power and words are evaluated through the root.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratorJson {
    pub forward: MapJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<MapJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<MapJson>,
    #[serde(default = "one")]
    pub root_power: usize,
}

fn check_word(gens: &[Generator], w: &Word) -> Result<()> {
    if let Some(i) = w.max_index() {
        if i >= gens.len() {
            return Err(Error::InvalidInput(format!(
                "word {w} uses generator {} but only {} exist",
                i + 1,
                gens.len()
            )));
        }
    }
    Ok(())
}

/// g_{i₁}^{σ₁}⋯g_{i_l}^{σ_l} as a product evaluated letter by letter.
pub fn word_map(gens: &[Generator], w: &Word) -> Result<ProductMap> {
    check_word(gens, w)?;
    if w.is_empty() {
        return Err(Error::Domain("the empty word has no dynamics".into()));
    }
    let mut pairs = Vec::new();
    for l in w.letters() {
        let g = &gens[l.index];
        pairs.extend(std::iter::repeat_n(g.root_pair(l.inverse), g.power));
    }
    Ok(ProductMap::from_pairs(&pairs))
}

/// The explicit left-to-right product; the empty word gives the identity.
pub fn evaluate_word(model: &LieModel, gens: &[Generator], w: &Word) -> Result<ExtAffineMap> {
    check_word(gens, w)?;
    let mut out = ExtAffineMap::identity(model);
    for l in w.letters() {
        out = out.compose(gens[l.index].pair(l.inverse).0);
    }
    Ok(out)
}

/// Margulis invariant, contraction strength and witness agreement of a word.
#[derive(Debug, Clone)]
pub struct WordData {
    pub m: DVector<f64>,
    pub s: f64,
    pub agreement: f64,
    pub split: DynamicalSplitting,
}

pub fn word_data(model: &LieModel, gens: &[Generator], w: &Word, tol_gap: f64) -> Result<WordData> {
    let split = word_map(gens, w)?.splitting(model, tol_gap)?;
    if !split.is_regular(model) {
        return Err(Error::NotRegular(format!("word {w} is not R-regular")));
    }
    let r = margulis_of_splitting(model, &split)?;
    Ok(WordData {
        m: DVector::from_vec(r.value),
        s: contraction_strength(model, &split)?,
        agreement: r.agreement,
        split,
    })
}

/// The 2k letters in the order a, A, b, B, ….
pub fn letters(k: usize) -> Vec<Letter> {
    (0..2 * k).map(Letter::from_rank).collect()
}

fn letter_splittings(model: &LieModel, gens: &[Generator], tol_gap: f64) -> Result<Vec<DynamicalSplitting>> {
    letters(gens.len()).iter().map(|l| word_map(gens, &Word(vec![*l]))?.splitting(model, tol_gap)).collect()
}

/// Canonizer bounds of (A≥ₓ, A≤ᵧ) over letters x, y with y ≠ x⁻¹.
fn admissible_bounds(model: &LieModel, k: usize, splits: &[DynamicalSplitting]) -> Vec<(Letter, Letter, Result<f64>)> {
    let ls = letters(k);
    let mut out = Vec::new();
    for &x in &ls {
        for &y in &ls {
            if y == x.inv() {
                continue;
            }
            let c = pair_canonize(model, &splits[x.rank()].a_ge, &splits[y.rank()].a_le).map(|c| c.c_bound);
            out.push((x, y, c));
        }
    }
    out
}

fn pair_name(x: Letter, y: Letter) -> String {
    format!("({}, {})", Word(vec![x]), Word(vec![y]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub power: usize,
    #[serde(default = "default_s_target")]
    pub s_target: f64,
    #[serde(default = "default_tol_gap")]
    pub tol_gap: f64,
    /// Largest canonizer bound over the admissible letter pairs.
    #[serde(default)]
    pub c_bound: f64,
    #[serde(default)]
    pub c_linear: f64,
    /// Additivity constant used by the certificate: ‖M₀‖/2.
    pub mu_hat: f64,
    /// Largest sampled additivity defect.
    #[serde(default)]
    pub mu_empirical: f64,
    pub m0: Vec<f64>,
    /// s(gᵢ), s(gᵢ⁻¹).
    #[serde(default)]
    pub contraction: Vec<[f64; 2]>,
    #[serde(default)]
    pub canonizers: Vec<CanonizerReport>,
    pub generators: Vec<GeneratorJson>,
    #[serde(default)]
    pub attempts: usize,
}

fn one() -> usize {
    1
}

fn default_s_target() -> f64 {
    1e-3
}

fn default_tol_gap() -> f64 {
    crate::ext_affine::DEFAULT_TOL_GAP
}

impl GeneratorSet {
    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn build_model(&self) -> Result<LieModel> {
        LieModel::build(self.model)
    }

    pub fn maps(&self, model: &LieModel) -> Result<Vec<Generator>> {
        if model.spec != self.model {
            return Err(Error::InvalidInput("generator set belongs to another model".into()));
        }
        self.generators
            .iter()
            .map(|g| {
                let mut fwd = ExtAffineMap::from_json(model, &g.forward)?;
                let mut inv = match &g.inverse {
                    Some(j) => ExtAffineMap::from_json(model, j)?,
                    None => fwd.inverse_in(model),
                };
                pair_adjoints(model, &mut fwd, &mut inv);
                let (root, power) = match &g.root {
                    Some(j) if g.root_power >= 1 => (ExtAffineMap::from_json(model, j)?, g.root_power),
                    Some(_) => return Err(Error::InvalidInput("root_power must be at least 1".into())),
                    None => (fwd.clone(), 1),
                };
                let root_inv = root.inverse_in(model);
                if power == 1 {
                    let err = identity_error(&fwd, &inv) / (fwd.hat().norm() * inv.hat().norm()).max(1.0);
                    if err > MATCH_TOL {
                        return Err(Error::InvalidInput(format!("generator inverse does not match ({err:.2e})")));
                    }
                } else {
                    for (name, target, f) in [("root", &fwd, &root), ("inverse root", &inv, &root_inv)] {
                        let diff = power_error(model, f, power, target);
                        if diff > MATCH_TOL {
                            return Err(Error::InvalidInput(format!("{name}^{power} does not match ({diff:.2e})")));
                        }
                    }
                }
                Ok(Generator { fwd, inv, root, root_inv, power })
            })
            .collect()
    }

    /// A set from explicit maps; C is left unchecked (0) and mu_hat = ‖M₀‖/2.
    pub fn from_maps(model: &LieModel, maps: &[ExtAffineMap], m0: &DVector<f64>) -> Self {
        Self {
            model: model.spec,
            seed: 0,
            power: 1,
            s_target: default_s_target(),
            tol_gap: default_tol_gap(),
            c_bound: 0.0,
            c_linear: 0.0,
            mu_hat: m0.norm() / 2.0,
            mu_empirical: 0.0,
            m0: m0.iter().copied().collect(),
            contraction: Vec::new(),
            canonizers: Vec::new(),
            generators: maps.iter().map(|g| Generator::new(model, g.clone()).to_json()).collect(),
            attempts: 0,
        }
    }

    pub fn m0_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.m0.clone())
    }
}

/// Recomputes both adjoint matrices from the two defining matrices, which
/// avoids inverting a badly conditioned h.
fn pair_adjoints(model: &LieModel, g: &mut ExtAffineMap, g_inv: &mut ExtAffineMap) {
    if let (Some(h), Some(hinv)) = (&g.defining, &g_inv.defining) {
        g.lin = model.adjoint_unchecked(h, hinv);
        g_inv.lin = model.adjoint_unchecked(hinv, h);
    }
}

/// ‖fᴺ − g‖ relative to ∏‖f‖, the scale of the rounding error of the
/// product.
fn power_error(model: &LieModel, f: &ExtAffineMap, n: usize, target: &ExtAffineMap) -> f64 {
    let mut acc = ExtAffineMap::identity(model);
    for _ in 0..n {
        acc = acc.compose(f);
    }
    let scale = linalg::op_norm(&f.hat()).powi(n as i32).max(linalg::op_norm(&target.hat()));
    linalg::op_norm(&(acc.hat() - target.hat())) / scale
}

fn identity_error(g: &ExtAffineMap, g_inv: &ExtAffineMap) -> f64 {
    let id = g.compose(g_inv).hat();
    (&id - DMatrix::identity(id.nrows(), id.ncols())).norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDefect {
    pub g: Word,
    pub h: Word,
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuEstimate {
    pub mu_hat: f64,
    pub samples: Vec<PairDefect>,
    pub histogram: Vec<HistogramBin>,
    pub excluded: Vec<String>,
}

fn random_cyclic_word(rng: &mut Sampler, k: usize, max_len: usize) -> Word {
    loop {
        let l = 1 + rng.index(max_len);
        let mut v: Vec<Letter> = Vec::with_capacity(l);
        while v.len() < l {
            let x = Letter::from_rank(rng.index(2 * k));
            if v.last() != Some(&x.inv()) {
                v.push(x);
            }
        }
        let w = Word(v);
        if w.is_cyclically_reduced() {
            return w;
        }
    }
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let hi = values.iter().copied().fold(0.0, f64::max);
    if values.is_empty() || hi == 0.0 {
        return vec![HistogramBin { lo: 0.0, hi, count: values.len() }];
    }
    let width = hi / bins as f64;
    let mut out: Vec<HistogramBin> =
        (0..bins).map(|b| HistogramBin { lo: b as f64 * width, hi: (b + 1) as f64 * width, count: 0 }).collect();
    for &v in values {
        let b = ((v / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    out
}

/// Max of ‖M(gh) − M(g) − M(h)‖ over sampled cyclically reduced pairs with
/// gh cyclically reduced.  Non-regular products are excluded and listed.
pub fn estimate_mu(
    model: &LieModel,
    gens: &[Generator],
    max_len: usize,
    n_pairs: usize,
    seed: u64,
    tol_gap: f64,
    exec: Execution,
) -> Result<MuEstimate> {
    if gens.is_empty() || max_len == 0 {
        return Err(Error::InvalidInput("estimate_mu needs generators and max_len ≥ 1".into()));
    }
    let k = gens.len();
    let mut rng = Sampler::derive(seed, MU_SEED_STREAM);
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let g = random_cyclic_word(&mut rng, k, max_len);
        let h = random_cyclic_word(&mut rng, k, max_len);
        if g.concat(&h).is_cyclically_reduced() {
            pairs.push((g, h));
        }
    }
    let results = par::map(exec, &pairs, |(g, h)| -> Result<f64> {
        let mg = word_data(model, gens, g, tol_gap)?.m;
        let mh = word_data(model, gens, h, tol_gap)?.m;
        let mgh = word_data(model, gens, &g.concat(h), tol_gap)?.m;
        Ok((mgh - mg - mh).norm())
    });
    let mut samples = Vec::new();
    let mut excluded = Vec::new();
    for ((g, h), r) in pairs.into_iter().zip(results) {
        match r {
            Ok(defect) => samples.push(PairDefect { g, h, defect }),
            Err(e) => excluded.push(format!("({g}, {h}): {e}")),
        }
    }
    let values: Vec<f64> = samples.iter().map(|s| s.defect).collect();
    Ok(MuEstimate {
        mu_hat: values.iter().copied().fold(0.0, f64::max),
        histogram: histogram(&values, 10),
        samples,
        excluded,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildConfig {
    pub k: usize,
    pub seed: u64,
    pub s_target: f64,
    pub tol_gap: f64,
    /// ‖M₀‖; the certificate uses mu_hat = ‖M₀‖/2.
    pub m0_norm: f64,
    /// Scale of the random conjugators.
    pub conj_scale: f64,
    /// Range of the simple-root values of the sampled Cartan elements.
    pub root_range: (f64, f64),
    pub max_attempts: usize,
    pub max_rounds: usize,
    pub mu_pairs: usize,
    pub mu_max_len: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            s_target: 1e-3,
            tol_gap: crate::ext_affine::DEFAULT_TOL_GAP,
            m0_norm: 1.0,
            conj_scale: 0.5,
            root_range: (0.5, 1.5),
            max_attempts: 50,
            max_rounds: 8,
            mu_pairs: 100,
            mu_max_len: 3,
        }
    }
}

/// γ = ψ exp(x) ψ⁻¹ with x ∈ a⁺ ⊕ m.
struct Base {
    psi: DMatrix<f64>,
    psi_inv: DMatrix<f64>,
    x: DVector<f64>,
}

impl Base {
    fn sample(model: &LieModel, rng: &mut Sampler, cfg: &BuildConfig) -> Result<Self> {
        let x = model.random_a_plus(rng, cfg.root_range.0, cfg.root_range.1) + model.random_m(rng, 1.0);
        let psi = model.random_group_element(rng, cfg.conj_scale);
        let psi_inv = model.group_inverse(&psi)?;
        Ok(Self { psi, psi_inv, x })
    }

    /// τ_t ∘ γᴺ = (τ_{t/N} ∘ γ)ᴺ with its inverse; γ fixes t since t ∈ Ad(ψ)𝔷.
    fn powered(&self, model: &LieModel, n: usize, t: Option<&DVector<f64>>) -> Generator {
        let t = t.cloned().unwrap_or_else(|| DVector::zeros(model.dim_g));
        let map = |k: f64, t: DVector<f64>| {
            let h = &self.psi * model.exp(&(&self.x * k)) * &self.psi_inv;
            let hinv = &self.psi * model.exp(&(&self.x * -k)) * &self.psi_inv;
            let lin = model.adjoint_unchecked(&h, &hinv);
            let lin_inv = model.adjoint_unchecked(&hinv, &h);
            let inv_t = -(&lin_inv * &t);
            (
                ExtAffineMap { lin, trans: t, defining: Some(h) },
                ExtAffineMap { lin: lin_inv, trans: inv_t, defining: Some(hinv) },
            )
        };
        let (root, root_inv) = map(1.0, &t / n as f64);
        let (fwd, inv) = map(n as f64, t);
        Generator { fwd, inv, root, root_inv, power: n }
    }
}

impl Base {
    /// φ = ψ⁻¹ takes the dynamics of τ_{Ad(ψ)M₀} ∘ ψ exp(Nx) ψ⁻¹ to the
    /// standard position; the residual is ‖φ g φ⁻¹ − τ_{M₀} exp(Nx)‖.
    fn canonizer(&self, model: &LieModel, n: usize, g: &Generator, m0_full: &DVector<f64>) -> CanonizerReport {
        let ad = model.adjoint_unchecked(&self.psi_inv, &self.psi);
        let ad_inv = model.adjoint_unchecked(&self.psi, &self.psi_inv);
        let phi =
            ExtAffineMap { lin: ad.clone(), trans: DVector::zeros(model.dim_g), defining: Some(self.psi_inv.clone()) };
        let phi_inv =
            ExtAffineMap { lin: ad_inv.clone(), trans: DVector::zeros(model.dim_g), defining: Some(self.psi.clone()) };
        let canonical = ExtAffineMap::from_defining(model, &model.exp(&(&self.x * n as f64)), m0_full.clone())
            .expect("exp lies in the group");
        let diff = phi.compose(&g.fwd).compose(&phi_inv).hat() - canonical.hat();
        let c_bound = linalg::op_norm(&ad).max(linalg::op_norm(&ad_inv)).max(1.0);
        Canonizer { phi, c_bound, residual: diff.norm() / canonical.hat().norm() }.report()
    }
}

fn max_letter_strength(model: &LieModel, splits: &[DynamicalSplitting]) -> Result<f64> {
    splits.iter().map(|s| contraction_strength(model, s)).try_fold(0.0, |acc: f64, s| Ok(acc.max(s?)))
}

fn next_power(n: usize) -> usize {
    n + (n / 2).max(1)
}

fn is_rejection(e: &Error) -> bool {
    matches!(
        e,
        Error::DegeneratePair(_) | Error::NotRegular(_) | Error::IllConditioned(_) | Error::NumericalInstability(_)
    )
}

/// Samples k regular linear maps with transverse dynamics, raises them to a
/// common power and attaches translations giving every generator the same
/// Margulis invariant M₀ = ‖M₀‖·v/‖v‖.  The power grows until the sampled
/// additivity defect is at most ‖M₀‖/2 and all hypotheses hold.
pub fn build_generators(model: &LieModel, cfg: &BuildConfig, exec: Execution) -> Result<GeneratorSet> {
    if cfg.k < 2 || cfg.k > super::word::MAX_LETTERS {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    if !(cfg.s_target > 0.0 && cfg.tol_gap > 0.0 && cfg.m0_norm > 0.0) {
        return Err(Error::InvalidInput("s_target, tol_gap and m0_norm must be positive".into()));
    }
    let v = model.neutral_vector();
    let m0 = &v * (cfg.m0_norm / v.norm());
    let m0_full = model.embed_z(&m0);
    let mu_hat = cfg.m0_norm / 2.0;

    for attempt in 0..cfg.max_attempts {
        let mut rng = Sampler::derive(cfg.seed, attempt as u64);
        let bases = (0..cfg.k).map(|_| Base::sample(model, &mut rng, cfg)).collect::<Result<Vec<_>>>()?;
        let lin1: Vec<Generator> = bases.iter().map(|b| b.powered(model, 1, None)).collect();
        let splits = match letter_splittings(model, &lin1, cfg.tol_gap) {
            Ok(s) if s.iter().all(|s| s.is_regular(model)) => s,
            Ok(_) => continue,
            Err(e) if is_rejection(&e) => continue,
            Err(e) => return Err(e),
        };
        let bounds = admissible_bounds(model, cfg.k, &splits);
        if bounds.iter().any(|(_, _, c)| c.is_err()) {
            continue;
        }
        let c_linear = bounds.iter().map(|(_, _, c)| *c.as_ref().unwrap()).fold(1.0, f64::max);

        let mut n = 1;
        loop {
            let lin: Vec<Generator> = bases.iter().map(|b| b.powered(model, n, None)).collect();
            let sp = letter_splittings(model, &lin, cfg.tol_gap);
            let s = max_letter_strength(model, &sp?)?;
            if s <= cfg.s_target {
                break;
            }
            n = next_power(n);
            if n > 100_000 {
                return Err(Error::ConstructionFailed("linear parts do not contract".into()));
            }
        }

        let mut last_failure = String::new();
        for _round in 0..cfg.max_rounds {
            let mut gens = Vec::with_capacity(cfg.k);
            let mut canonizers = Vec::with_capacity(cfg.k);
            for b in &bases {
                let t = model.adjoint_unchecked(&b.psi, &b.psi_inv) * &m0_full;
                let g = b.powered(model, n, Some(&t));
                canonizers.push(b.canonizer(model, n, &g, &m0_full));
                gens.push(g);
            }
            let splits = letter_splittings(model, &gens, cfg.tol_gap)?;
            let strengths: Vec<f64> =
                splits.iter().map(|s| contraction_strength(model, s)).collect::<Result<Vec<_>>>()?;
            if strengths.iter().any(|&s| s > cfg.s_target) {
                last_failure = format!("H3: s = {:.3e} at power {n}", strengths.iter().copied().fold(0.0, f64::max));
                n = next_power(n);
                continue;
            }
            let mu = estimate_mu(model, &gens, cfg.mu_max_len, cfg.mu_pairs, cfg.seed, cfg.tol_gap, exec)?;
            if mu.mu_hat > mu_hat || !mu.excluded.is_empty() {
                last_failure = format!(
                    "additivity defect {:.3e} above {mu_hat:.3e} ({} products excluded) at power {n}",
                    mu.mu_hat,
                    mu.excluded.len()
                );
                n = next_power(n);
                continue;
            }
            let c_bound = admissible_bounds(model, cfg.k, &splits)
                .into_iter()
                .map(|(_, _, c)| c)
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(1.0, f64::max);
            let set = GeneratorSet {
                model: model.spec,
                seed: cfg.seed,
                power: n,
                s_target: cfg.s_target,
                tol_gap: cfg.tol_gap,
                c_bound,
                c_linear,
                mu_hat,
                mu_empirical: mu.mu_hat,
                m0: m0.iter().copied().collect(),
                contraction: strengths.chunks(2).map(|c| [c[0], c[1]]).collect(),
                canonizers,
                generators: gens.iter().map(|g| g.to_json()).collect(),
                attempts: attempt + 1,
            };
            let report = verify_hypotheses(model, &set)?;
            if report.pass {
                return Ok(set);
            }
            last_failure = format!("hypotheses {} fail at power {n}", report.failed.join(", "));
            n = next_power(n);
        }
        return Err(Error::ConstructionFailed(format!(
            "no valid generator set after {} rounds: {last_failure}",
            cfg.max_rounds
        )));
    }
    Err(Error::Sampling(format!(
        "no transverse regular family found in {} attempts; try another seed",
        cfg.max_attempts
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub pass: bool,
    pub values: Vec<f64>,
    pub failures: Vec<String>,
}

impl HypothesisCheck {
    fn new(values: Vec<f64>, failures: Vec<String>) -> Self {
        Self { pass: failures.is_empty(), values, failures }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Neutral dimension of each letter.
    pub h1: HypothesisCheck,
    /// Canonizer bound of each admissible letter pair.
    pub h2: HypothesisCheck,
    /// s of each letter.
    pub h3: HypothesisCheck,
    /// ‖M(x) − M₀‖ for each letter x.
    pub h4: HypothesisCheck,
    pub pass: bool,
    pub failed: Vec<String>,
}

/// Checks (H1) regularity, (H2) admissible pairs canonizable, (H3)
/// s ≤ s_target and (H4) M(gᵢ^{±1}) = M₀ on every letter.
pub fn verify_hypotheses(model: &LieModel, set: &GeneratorSet) -> Result<HypothesisReport> {
    let gens = set.maps(model)?;
    let k = gens.len();
    let m0 = set.m0_vector();
    if m0.len() != model.z.len() {
        return Err(Error::InvalidInput(format!("M₀ must have {} coordinates", model.z.len())));
    }
    let ls = letters(k);
    let splits: Vec<Result<DynamicalSplitting>> =
        ls.iter().map(|l| word_map(&gens, &Word(vec![*l]))?.splitting(model, set.tol_gap)).collect();

    let mut h1_vals = Vec::new();
    let mut h1_fail = Vec::new();
    for (l, s) in ls.iter().zip(&splits) {
        let name = Word(vec![*l]).to_string();
        match s {
            Ok(s) => {
                h1_vals.push(s.aeq.ncols() as f64);
                if !s.is_regular(model) {
                    h1_fail.push(format!("{name}: neutral dimension {}", s.aeq.ncols()));
                }
            }
            Err(e) => {
                h1_vals.push(f64::NAN);
                h1_fail.push(format!("{name}: {e}"));
            }
        }
    }
    let h1 = HypothesisCheck::new(h1_vals, h1_fail);

    let mut h2_vals = Vec::new();
    let mut h2_fail = Vec::new();
    let mut h3_vals = Vec::new();
    let mut h3_fail = Vec::new();
    let mut h4_vals = Vec::new();
    let mut h4_fail = Vec::new();
    if h1.pass {
        let splits: Vec<DynamicalSplitting> = splits.into_iter().map(|s| s.unwrap()).collect();
        for (x, y, c) in admissible_bounds(model, k, &splits) {
            match c {
                Ok(c) => {
                    h2_vals.push(c);
                    if set.c_bound > 0.0 && c > set.c_bound * (1.0 + 1e-6) {
                        h2_fail.push(format!("{}: bound {c:.6e} above C = {:.6e}", pair_name(x, y), set.c_bound));
                    }
                }
                Err(e) => {
                    h2_vals.push(f64::INFINITY);
                    h2_fail.push(format!("{}: {e}", pair_name(x, y)));
                }
            }
        }
        for (l, s) in ls.iter().zip(&splits) {
            let name = Word(vec![*l]).to_string();
            let sv = contraction_strength(model, s)?;
            h3_vals.push(sv);
            if !(sv <= set.s_target) {
                h3_fail.push(format!("{name}: s = {sv:.6e} above {:.6e}", set.s_target));
            }
            match margulis_of_splitting(model, s) {
                Ok(r) => {
                    let d = (DVector::from_vec(r.value) - &m0).norm();
                    h4_vals.push(d);
                    if d > H4_TOL {
                        h4_fail.push(format!("{name}: ‖M − M₀‖ = {d:.6e}"));
                    }
                }
                Err(e) => {
                    h4_vals.push(f64::NAN);
                    h4_fail.push(format!("{name}: {e}"));
                }
            }
        }
    } else {
        let skipped = vec!["skipped: (H1) fails".to_string()];
        h2_fail = skipped.clone();
        h3_fail = skipped.clone();
        h4_fail = skipped;
    }
    let h2 = HypothesisCheck::new(h2_vals, h2_fail);
    let h3 = HypothesisCheck::new(h3_vals, h3_fail);
    let h4 = HypothesisCheck::new(h4_vals, h4_fail);
    let failed: Vec<String> = [("H1", &h1), ("H2", &h2), ("H3", &h3), ("H4", &h4)]
        .iter()
        .filter(|(_, h)| !h.pass)
        .map(|(n, _)| n.to_string())
        .collect();
    Ok(HypothesisReport { pass: failed.is_empty(), h1, h2, h3, h4, failed })
}
