use std::path::{Path, PathBuf};

use margulis_core::ModelSpec;
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand.  A JSON file given with `--config`
/// provides the starting values; command-line flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub tol_gap: f64,
    /// Slack in the growth check ‖M(w)‖ ≥ l·mu_hat − tol.
    pub residual_tol: f64,
    pub s_target: f64,
    pub max_len: usize,
    pub k: usize,
    /// Sampled pairs for the additivity estimate and the product harness.
    pub samples: usize,
    pub ball_radius: f64,
    pub points: usize,
    pub sequential: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "sl:2".parse().expect("valid model"),
            seed: 0,
            tol_gap: 1e-6,
            residual_tol: 1e-6,
            s_target: 1e-3,
            max_len: 6,
            k: 2,
            samples: 100,
            ball_radius: 1.0,
            points: 20,
            sequential: false,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    /// `min_len` is 0 for export, which accepts the bare ball.
    pub fn validate(&self, min_len: usize) -> Result<(), String> {
        for (name, v) in [("tol-gap", self.tol_gap), ("residual-tol", self.residual_tol), ("s-target", self.s_target)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("--{name} must be a positive number"));
            }
        }
        if !(self.ball_radius >= 0.0 && self.ball_radius.is_finite()) {
            return Err("--radius must be non-negative".into());
        }
        if self.max_len < min_len {
            return Err(format!("--max-len must be at least {min_len}"));
        }
        if self.k < 2 {
            return Err("--k must be at least 2".into());
        }
        if self.samples == 0 {
            return Err("--samples must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            model: "so:4".parse().unwrap(),
            seed: 11,
            tol_gap: 3e-7,
            s_target: 2.5e-4,
            out: Some(PathBuf::from("runs/a")),
            ..Default::default()
        };
        let text = margulis_core::json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(margulis_core::json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn partial_files_use_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"model": {"family": "sl", "n": 3}, "seed": 4}"#).unwrap();
        assert_eq!(cfg.model, "sl:3".parse().unwrap());
        assert_eq!(cfg.max_len, RunConfig::default().max_len);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 4}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate(1).is_ok());
        assert!(RunConfig { tol_gap: 0.0, ..Default::default() }.validate(1).is_err());
        assert!(RunConfig { max_len: 0, ..Default::default() }.validate(1).is_err());
        assert!(RunConfig { max_len: 0, ..Default::default() }.validate(0).is_ok());
        assert!(RunConfig { k: 1, ..Default::default() }.validate(1).is_err());
    }
}
