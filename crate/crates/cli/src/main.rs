//! Command-line front end: model checks, single-map analysis, product
//! experiments, generator construction, certification and orbit export.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use margulis_core::ModelSpec;

use commands::Failure;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "margulis", version, about = "Margulis invariants and affine Schottky groups")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// JSON file with a RunConfig; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// sl:N or so:N.
    #[arg(long, global = true, value_parser = parse_model)]
    model: Option<ModelSpec>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    s_target: Option<f64>,
    #[arg(long, global = true)]
    max_len: Option<usize>,
    #[arg(long, global = true)]
    tol_gap: Option<f64>,
    /// Slack of the growth check.
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    /// Number of generators.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Radius of the ball for displacement checks and orbit export.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Sample points of the ball for orbit export.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Disable data parallelism.
    #[arg(long, global = true)]
    sequential: bool,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model and print its structural residuals.
    Model,
    /// Splitting, contraction strength, canonizer and Margulis invariant of a
    /// map given as JSON (file or stdin).
    Analyze {
        /// Map JSON; `-` or absent reads stdin.
        input: Option<PathBuf>,
    },
    /// Product experiment for two maps, or the sampled harness without maps.
    Product { g: Option<PathBuf>, h: Option<PathBuf> },
    /// Construct a generator set.
    Build,
    /// Verify the hypotheses of a generator set and certify growth.
    Certify { generators: PathBuf },
    /// Orbit point clouds of a ball under all reduced words up to --max-len.
    Export { generators: PathBuf },
}

fn parse_model(s: &str) -> Result<ModelSpec, String> {
    s.parse().map_err(|e: margulis_core::Error| e.to_string())
}

fn resolve(opts: &Opts) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(m) = opts.model {
        cfg.model = m;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = opts.$field { cfg.$field = v; })*};
    }
    set!(seed, s_target, max_len, tol_gap, residual_tol, k, samples, points);
    if let Some(r) = opts.radius {
        cfg.ball_radius = r;
    }
    if opts.sequential {
        cfg.sequential = true;
    }
    if opts.out.is_some() {
        cfg.out = opts.out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli.opts)?;
    let min_len = usize::from(!matches!(cli.command, Command::Export { .. }));
    cfg.validate(min_len).map_err(Failure::Usage)?;
    let model_flag = cli.opts.model.is_some();
    commands::save_config(&cfg)?;
    match &cli.command {
        Command::Model => commands::model(&cfg),
        Command::Analyze { input } => commands::analyze(&cfg, input.as_deref()),
        Command::Product { g, h } => commands::product(&cfg, g.as_deref(), h.as_deref()),
        Command::Build => commands::build(&cfg),
        Command::Certify { generators } => commands::certify(&cfg, generators, model_flag),
        Command::Export { generators } => commands::export(&cfg, generators, model_flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
