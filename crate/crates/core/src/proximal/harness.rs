//! Sampled products of strongly contracting pairs, with empirical constants
//! grouped by the pair bound C.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{exterior_power, projective_angle, proximal_data};
use crate::error::Result;
use crate::ext_affine::{contraction_strength, hausdorff_angle, pair_bound, Dynamics, ExtAffineMap, ProductMap};
use crate::lie_model::LieModel;
use crate::par::{self, Execution};
use crate::rng::Sampler;

#[derive(Debug, Clone, Serialize)]
pub struct HarnessConfig {
    pub samples: usize,
    pub seed: u64,
    /// Powers are raised until s ≤ s_threshold.
    pub s_threshold: f64,
    pub conj_scale: f64,
    pub tol_gap: f64,
    pub max_power: usize,
    /// Also measure Λᵖ (expensive for large p).
    pub proximal: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { samples: 20, seed: 0, s_threshold: 1e-3, conj_scale: 0.4, tol_gap: 1e-6, max_power: 64, proximal: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductSample {
    pub stream: u64,
    pub power_g: usize,
    pub power_h: usize,
    pub c_bound: f64,
    pub s_g: f64,
    pub s_h: f64,
    pub s_gh: f64,
    pub r_regular: bool,
    /// α^Haus(A≥_gh, A≥_g) / s(g).
    pub k_angle: f64,
    /// s(gh) / (s(g)s(h)).
    pub k_strength: f64,
    /// α^Haus(V≥_ℓ(gh), V≥_ℓ(g)) / s(ℓ(g)).
    pub k_linear: f64,
    pub proximal: Option<bool>,
    /// α(E^s_γ₁γ₂, E^s_γ₁) / s̃(γ₁).
    pub k_prox_angle: Option<f64>,
    /// s̃(γ₁γ₂) / (s̃(γ₁)s̃(γ₂)).
    pub k_prox_strength: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bucket {
    pub c_lo: f64,
    pub c_hi: f64,
    pub count: usize,
    pub k_angle: f64,
    pub k_strength: f64,
    pub k_linear: f64,
    pub k_prox_angle: Option<f64>,
    pub k_prox_strength: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessReport {
    pub config: HarnessConfig,
    pub samples: Vec<ProductSample>,
    pub buckets: Vec<Bucket>,
    pub failures: usize,
}

struct Powered {
    fwd: ExtAffineMap,
    inv: ExtAffineMap,
    n: usize,
}

impl Powered {
    fn product(&self, other: Option<&Powered>) -> ProductMap {
        let mut pairs = vec![(&self.fwd, &self.inv); self.n];
        if let Some(o) = other {
            pairs.extend(std::iter::repeat_n((&o.fwd, &o.inv), o.n));
        }
        ProductMap::from_pairs(&pairs)
    }

    fn linear(&self) -> Powered {
        Powered { fwd: self.fwd.linear_part(), inv: self.inv.linear_part(), n: self.n }
    }

    fn hat_power(&self) -> DMatrix<f64> {
        let h = self.fwd.hat();
        let mut m = DMatrix::identity(h.nrows(), h.ncols());
        for _ in 0..self.n {
            m = &h * m;
        }
        m
    }
}

fn random_map(model: &LieModel, rng: &mut Sampler, cfg: &HarnessConfig) -> Result<Powered> {
    let a = model.random_a_plus(rng, 0.5, 1.5);
    let core = model.exp(&a) * model.exp(&model.random_m(rng, 1.0));
    let psi = model.random_group_element(rng, cfg.conj_scale);
    let h = &psi * core * model.group_inverse(&psi)?;
    let fwd = ExtAffineMap::from_defining(model, &h, rng.normal_vector(model.dim_g))?;
    let inv = fwd.inverse_in(model);
    let mut p = Powered { fwd, inv, n: 1 };
    while p.n < cfg.max_power {
        let split = p.product(None).splitting(model, cfg.tol_gap)?;
        if contraction_strength(model, &split)? <= cfg.s_threshold {
            break;
        }
        p.n += 1;
    }
    Ok(p)
}

fn sample(model: &LieModel, cfg: &HarnessConfig, stream: u64) -> Result<ProductSample> {
    let mut rng = Sampler::derive(cfg.seed, stream);
    let g = random_map(model, &mut rng, cfg)?;
    let h = random_map(model, &mut rng, cfg)?;
    let sg = g.product(None).splitting(model, cfg.tol_gap)?;
    let sh = h.product(None).splitting(model, cfg.tol_gap)?;
    let c_bound = pair_bound(model, &sg, &sh)?;
    let (s_g, s_h) = (contraction_strength(model, &sg)?, contraction_strength(model, &sh)?);
    let sgh = g.product(Some(&h)).splitting(model, cfg.tol_gap)?;
    let r_regular = sgh.is_regular(model);
    let s_gh = contraction_strength(model, &sgh)?;
    let k_angle = hausdorff_angle(&sgh.a_ge, &sg.a_ge)? / s_g;

    let (gl, hl) = (g.linear(), h.linear());
    let sgl = gl.product(None).splitting(model, cfg.tol_gap)?;
    let sghl = gl.product(Some(&hl)).splitting(model, cfg.tol_gap)?;
    let v_ge = |s: &crate::ext_affine::DynamicalSplitting| s.a_ge.rows(0, model.dim_g).into_owned();
    let k_linear = hausdorff_angle(&v_ge(&sghl), &v_ge(&sgl))? / contraction_strength(model, &sgl)?;

    let (mut proximal, mut k_prox_angle, mut k_prox_strength) = (None, None, None);
    if cfg.proximal {
        let p = model.p();
        let g1 = exterior_power(&g.hat_power(), p)?;
        let g2 = exterior_power(&h.hat_power(), p)?;
        let g12 = &g1 * &g2;
        let (d1, d2, d12) =
            (proximal_data(&g1, cfg.tol_gap)?, proximal_data(&g2, cfg.tol_gap)?, proximal_data(&g12, cfg.tol_gap)?);
        proximal = Some(d12.is_some());
        if let (Some(d1), Some(d2), Some(d12)) = (d1, d2, d12) {
            k_prox_angle = Some(projective_angle(&d12.es, &d1.es)? / d1.stilde);
            k_prox_strength = Some(d12.stilde / (d1.stilde * d2.stilde));
        }
    }
    Ok(ProductSample {
        stream,
        power_g: g.n,
        power_h: h.n,
        c_bound,
        s_g,
        s_h,
        s_gh,
        r_regular,
        k_angle,
        k_strength: s_gh / (s_g * s_h),
        k_linear,
        proximal,
        k_prox_angle,
        k_prox_strength,
        error: None,
    })
}

fn failed(stream: u64, e: String) -> ProductSample {
    ProductSample {
        stream,
        power_g: 0,
        power_h: 0,
        c_bound: f64::NAN,
        s_g: f64::NAN,
        s_h: f64::NAN,
        s_gh: f64::NAN,
        r_regular: false,
        k_angle: f64::NAN,
        k_strength: f64::NAN,
        k_linear: f64::NAN,
        proximal: None,
        k_prox_angle: None,
        k_prox_strength: None,
        error: Some(e),
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Samples pairs (g, h) of powered random maps with s ≤ threshold and
/// records the ratios appearing in the product estimates.  C-buckets are
/// [2ᵏ, 2ᵏ⁺¹).
pub fn product_harness(model: &LieModel, cfg: &HarnessConfig, exec: Execution) -> HarnessReport {
    let streams: Vec<u64> = (0..cfg.samples as u64).collect();
    let samples = par::map(exec, &streams, |&s| sample(model, cfg, s).unwrap_or_else(|e| failed(s, e.to_string())));
    let mut buckets: Vec<Bucket> = Vec::new();
    for s in samples.iter().filter(|s| s.error.is_none()) {
        let k = s.c_bound.log2().floor().max(0.0);
        let (lo, hi) = (2f64.powf(k), 2f64.powf(k + 1.0));
        let pos = match buckets.iter().position(|b| b.c_lo == lo) {
            Some(i) => i,
            None => {
                buckets.push(Bucket {
                    c_lo: lo,
                    c_hi: hi,
                    count: 0,
                    k_angle: 0.0,
                    k_strength: 0.0,
                    k_linear: 0.0,
                    k_prox_angle: None,
                    k_prox_strength: None,
                });
                buckets.len() - 1
            }
        };
        let b = &mut buckets[pos];
        b.count += 1;
        b.k_angle = b.k_angle.max(s.k_angle);
        b.k_strength = b.k_strength.max(s.k_strength);
        b.k_linear = b.k_linear.max(s.k_linear);
        b.k_prox_angle = max_opt(b.k_prox_angle, s.k_prox_angle);
        b.k_prox_strength = max_opt(b.k_prox_strength, s.k_prox_strength);
    }
    buckets.sort_by(|a, b| a.c_lo.total_cmp(&b.c_lo));
    let failures = samples.iter().filter(|s| s.error.is_some()).count();
    HarnessReport { config: cfg.clone(), samples, buckets, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_model::{build_model, Family};

    #[test]
    fn sl2_products_are_regular_and_proximal() {
        let m = build_model(Family::Sl, 2).unwrap();
        let cfg = HarnessConfig { samples: 6, seed: 3, ..Default::default() };
        let r = product_harness(&m, &cfg, Execution::Parallel);
        assert_eq!(r.failures, 0, "{:?}", r.samples.iter().filter_map(|s| s.error.clone()).collect::<Vec<_>>());
        for s in &r.samples {
            assert!(s.r_regular);
            assert_eq!(s.proximal, Some(true));
            assert!(s.s_g <= cfg.s_threshold && s.s_h <= cfg.s_threshold);
            assert!(s.k_strength.is_finite() && s.k_angle.is_finite());
        }
        assert_eq!(r.buckets.iter().map(|b| b.count).sum::<usize>(), 6);
        let again = product_harness(&m, &cfg, Execution::Sequential);
        assert_eq!(crate::json::to_string(&r).unwrap(), crate::json::to_string(&again).unwrap());
    }
}
