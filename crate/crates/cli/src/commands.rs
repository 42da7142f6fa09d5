use std::io::Read;
use std::path::Path;

use margulis_core::ext_affine::{
    canonize, contraction_strength, hausdorff_angle, margulis_of_splitting, pair_bound, Dynamics, ExtAffineMap,
    MapJson, ProductMap,
};
use margulis_core::json;
use margulis_core::par::Execution;
use margulis_core::proximal::harness::{product_harness, HarnessConfig};
use margulis_core::schottky::{
    build_generators, certify_growth, export_orbits, verify_hypotheses, write_orbits_csv, BuildConfig, CertifyConfig,
    GeneratorSet,
};
use margulis_core::{Error, LieModel, ModelSpec};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

/// Exit status 1 (mathematical or verification failure) or 2 (usage).
#[derive(Debug)]
pub enum Failure {
    Math(String),
    Usage(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Math(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Math(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Json(_) | Error::UnsupportedModel(_) => Failure::Usage(e.to_string()),
            Error::Io(_) => Failure::Usage(e.to_string()),
            _ => Failure::Math(e.to_string()),
        }
    }
}

pub type Outcome = Result<(), Failure>;

fn exec(cfg: &RunConfig) -> Execution {
    if cfg.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Writes `name` into the output directory, or to stdout without one.
fn emit(cfg: &RunConfig, name: &str, contents: &str) -> Outcome {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(cfg: &RunConfig, name: &str, value: &T) -> Outcome {
    emit(cfg, name, &json::to_string(value)?)
}

fn read_input(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn parse_map(model: &LieModel, text: &str) -> Result<ExtAffineMap, Failure> {
    let j: MapJson = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("malformed map JSON: {e}")))?;
    ExtAffineMap::from_json(model, &j).map_err(|e| Failure::Usage(format!("invalid map: {e}")))
}

fn load_generators(cfg: &RunConfig, path: &Path, model_flag: bool) -> Result<(LieModel, GeneratorSet), Failure> {
    let text = read_input(Some(path))?;
    let set: GeneratorSet =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("malformed generator set: {e}")))?;
    if model_flag && set.model != cfg.model {
        return Err(Failure::Usage(format!("--model {} does not match the generator set ({})", cfg.model, set.model)));
    }
    Ok((set.build_model()?, set))
}

pub fn model(cfg: &RunConfig) -> Outcome {
    let model = LieModel::build(cfg.model)?;
    let report = model.verify();
    emit_json(cfg, "model.json", &report)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Math(format!("structure checks fail for {}", cfg.model)))
    }
}

pub fn analyze(cfg: &RunConfig, input: Option<&Path>) -> Outcome {
    let model = LieModel::build(cfg.model)?;
    let g = parse_map(&model, &read_input(input)?)?;
    let mut out = serde_json::Map::new();
    out.insert("model".into(), json!(cfg.model));
    out.insert("tol_gap".into(), json!(cfg.tol_gap));
    let mut errors: Vec<String> = Vec::new();
    match g.splitting(&model, cfg.tol_gap) {
        Ok(split) => {
            let regular = split.is_regular(&model);
            out.insert("r_regular".into(), json!(regular));
            out.insert("splitting".into(), serde_json::to_value(split.report()).map_err(Error::from)?);
            if regular {
                match contraction_strength(&model, &split) {
                    Ok(s) => {
                        out.insert("s".into(), json!(s));
                    }
                    Err(e) => errors.push(format!("contraction strength: {e}")),
                }
                match canonize(&model, &g, cfg.tol_gap) {
                    Ok(c) => {
                        out.insert("canonizer".into(), serde_json::to_value(c.report()).map_err(Error::from)?);
                    }
                    Err(e) => errors.push(format!("canonizer: {e}")),
                }
                match margulis_of_splitting(&model, &split) {
                    Ok(r) => {
                        out.insert("margulis".into(), json!(r.value));
                        out.insert("margulis_agreement".into(), json!(r.agreement));
                    }
                    Err(e) => errors.push(format!("Margulis invariant: {e}")),
                }
            } else {
                errors.push(format!(
                    "not R-regular: neutral dimension {} instead of {}",
                    split.aeq.ncols(),
                    model.dim_l() + 1
                ));
            }
        }
        Err(e) => {
            out.insert("r_regular".into(), json!(false));
            errors.push(format!("splitting: {e}"));
        }
    }
    out.insert("errors".into(), json!(errors));
    emit_json(cfg, "analysis.json", &Value::Object(out))?;
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Math(errors.join("; ")))
    }
}

#[derive(Serialize)]
struct ProductReport {
    model: ModelSpec,
    c_bound: f64,
    s_g: f64,
    s_h: f64,
    s_gh: f64,
    r_regular_gh: bool,
    /// s(gh) / (s(g)s(h)).
    k_strength: f64,
    /// α^Haus(A≥_gh, A≥_g).
    angle_ge: f64,
    /// α^Haus(A≤_gh, A≤_h).
    angle_le: f64,
    margulis_g: Vec<f64>,
    margulis_h: Vec<f64>,
    margulis_gh: Vec<f64>,
    /// ‖M(gh) − M(g) − M(h)‖.
    defect: f64,
}

pub fn product(cfg: &RunConfig, g_path: Option<&Path>, h_path: Option<&Path>) -> Outcome {
    let model = LieModel::build(cfg.model)?;
    let (g_path, h_path) = match (g_path, h_path) {
        (None, None) => return product_sampled(cfg, &model),
        (Some(g), Some(h)) => (g, h),
        _ => return Err(Failure::Usage("product needs two maps, or none for the sampled harness".into())),
    };
    if g_path == Path::new("-") && h_path == Path::new("-") {
        return Err(Failure::Usage("only one map can come from stdin".into()));
    }
    let g = parse_map(&model, &read_input(Some(g_path))?)?;
    let h = parse_map(&model, &read_input(Some(h_path))?)?;
    let gh = g.compose(&h).hat();
    let id_err = (&gh - DMatrix::identity(gh.nrows(), gh.ncols())).norm() / g.hat().norm().max(h.hat().norm());
    if id_err < 1e-8 {
        return Err(Failure::Math("inadmissible pair: h is the inverse of g".into()));
    }
    let sg = g.splitting(&model, cfg.tol_gap)?;
    let sh = h.splitting(&model, cfg.tol_gap)?;
    if !sg.is_regular(&model) || !sh.is_regular(&model) {
        return Err(Failure::Math("both maps must be R-regular".into()));
    }
    let c_bound = pair_bound(&model, &sg, &sh)?;
    let (gi, hi) = (g.inverse_in(&model), h.inverse_in(&model));
    let prod = ProductMap::from_pairs(&[(&g, &gi), (&h, &hi)]);
    let sgh = prod.splitting(&model, cfg.tol_gap)?;
    let r_regular_gh = sgh.is_regular(&model);
    if !r_regular_gh {
        return Err(Failure::Math("the product gh is not R-regular".into()));
    }
    let mg = margulis_of_splitting(&model, &sg)?.value;
    let mh = margulis_of_splitting(&model, &sh)?.value;
    let mgh = margulis_of_splitting(&model, &sgh)?.value;
    let defect = mgh.iter().zip(&mg).zip(&mh).map(|((a, b), c)| (a - b - c).powi(2)).sum::<f64>().sqrt();
    let (s_g, s_h, s_gh) =
        (contraction_strength(&model, &sg)?, contraction_strength(&model, &sh)?, contraction_strength(&model, &sgh)?);
    let report = ProductReport {
        model: cfg.model,
        c_bound,
        s_g,
        s_h,
        s_gh,
        r_regular_gh,
        k_strength: s_gh / (s_g * s_h),
        angle_ge: hausdorff_angle(&sgh.a_ge, &sg.a_ge)?,
        angle_le: hausdorff_angle(&sgh.a_le, &sh.a_le)?,
        margulis_g: mg,
        margulis_h: mh,
        margulis_gh: mgh,
        defect,
    };
    emit_json(cfg, "product.json", &report)
}

fn product_sampled(cfg: &RunConfig, model: &LieModel) -> Outcome {
    let hc = HarnessConfig {
        samples: cfg.samples,
        seed: cfg.seed,
        s_threshold: cfg.s_target,
        tol_gap: cfg.tol_gap,
        proximal: model.dim_ghat() <= 12,
        ..Default::default()
    };
    let report = product_harness(model, &hc, exec(cfg));
    emit_json(cfg, "product_harness.json", &report)
}

pub fn build(cfg: &RunConfig) -> Outcome {
    let model = LieModel::build(cfg.model)?;
    let bc = BuildConfig {
        k: cfg.k,
        seed: cfg.seed,
        s_target: cfg.s_target,
        tol_gap: cfg.tol_gap,
        mu_pairs: cfg.samples,
        ..Default::default()
    };
    let set = build_generators(&model, &bc, exec(cfg))?;
    eprintln!(
        "built {} generators for {}: N = {}, C = {:.4}, mu_hat = {:.4}, sampled defect {:.3e}",
        set.k(),
        cfg.model,
        set.power,
        set.c_bound,
        set.mu_hat,
        set.mu_empirical
    );
    emit_json(cfg, "generators.json", &set)
}

pub fn certify(cfg: &RunConfig, generators: &Path, model_flag: bool) -> Outcome {
    let (model, set) = load_generators(cfg, generators, model_flag)?;
    let hyp = verify_hypotheses(&model, &set)?;
    if !hyp.pass {
        emit_json(cfg, "hypotheses.json", &hyp)?;
        let details: Vec<String> =
            [&hyp.h1, &hyp.h2, &hyp.h3, &hyp.h4].iter().flat_map(|h| h.failures.iter().take(2).cloned()).collect();
        return Err(Failure::Math(format!("hypotheses {} fail: {}", hyp.failed.join(", "), details.join("; "))));
    }
    let cc = CertifyConfig { max_len: cfg.max_len, tol: cfg.residual_tol, ball_radius: cfg.ball_radius };
    let cert = certify_growth(&model, &set, &cc, exec(cfg))?;
    emit_json(cfg, "certificate.json", &cert)?;
    if cfg.out.is_some() {
        let mut csv = Vec::new();
        cert.write_csv(&mut csv)?;
        emit(cfg, "certificate.csv", &String::from_utf8(csv).expect("CSV is UTF-8"))?;
    }
    eprintln!(
        "{} certificate for {} words up to length {}: slope {:.6}, pass = {}",
        cert.label, cert.word_count, cert.max_len, cert.slope, cert.pass
    );
    if cert.pass {
        Ok(())
    } else {
        Err(Failure::Math(format!("certificate fails: {}", cert.failures.first().cloned().unwrap_or_default())))
    }
}

pub fn export(cfg: &RunConfig, generators: &Path, model_flag: bool) -> Outcome {
    let (model, set) = load_generators(cfg, generators, model_flag)?;
    let gens = set.maps(&model)?;
    let points = export_orbits(&model, &gens, cfg.max_len, cfg.ball_radius, cfg.points, cfg.seed, exec(cfg))?;
    let mut csv = Vec::new();
    write_orbits_csv(&points, model.dim_g, &mut csv)?;
    emit(cfg, "orbits.csv", &String::from_utf8(csv).expect("CSV is UTF-8"))
}

/// Records the effective configuration next to the outputs.
pub fn save_config(cfg: &RunConfig) -> Outcome {
    if cfg.out.is_some() {
        emit_json(cfg, "run_config.json", cfg)?;
    }
    Ok(())
}
