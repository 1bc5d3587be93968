//! Experiment runner for `oscimax`: config resolution, dispatch to the
//! verification suites, and CSV/JSON report writing.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, ResolvedConfig};
pub use report::{Check, RunOutput, Summary, Table};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Numeric(#[from] oscimax::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use oscimax::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numeric(E::Convergence { .. }) => EXIT_NO_CONVERGENCE,
            CliError::Numeric(E::Degenerate(_)) => EXIT_CHECK_FAILED,
            CliError::Numeric(_) => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oscimax", about = "Run a verification experiment, or `list` the catalog")]
pub struct Args {
    /// Experiment name, or `list`.
    pub experiment: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated Riesz orders.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    #[arg(long)]
    pub n_modes: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Args {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            alpha: self.alpha,
            beta: self.beta,
            p: self.p,
            k: self.k.clone(),
            n_modes: self.n_modes,
            sigma: self.sigma,
            seed: self.seed,
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

pub fn parse_kind(name: &str) -> Result<ExperimentKind, CliError> {
    ExperimentKind::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| CliError::Usage(format!("unknown experiment `{name}`; run `oscimax list`")))
}

/// File values first, then flags.
pub fn resolve_args(args: &Args) -> Result<ResolvedConfig, CliError> {
    let kind = parse_kind(&args.experiment)?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.overlay(&args.overrides());
    cfg.resolve(kind)
}

pub fn run_experiment(cfg: &ResolvedConfig) -> Result<RunOutput, CliError> {
    experiments::run(cfg)
}

/// Catalog of every experiment with its default parameters.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for kind in ExperimentKind::ALL {
        let defaults = ExperimentConfig::defaults(kind);
        let json = serde_json::to_string(&ExperimentConfig {
            experiment: None,
            out: None,
            ..defaults
        })
        .expect("defaults serialize");
        let _ = writeln!(s, "{kind}\n  checks: {}\n  defaults: {json}", kind.anchor());
    }
    s
}

/// Runs the command line and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if args.experiment == "list" {
        print!("{}", list_experiments());
        return EXIT_PASS;
    }
    match run_args(&args) {
        Ok(summary) => {
            print!("{}", summary.to_text());
            if summary.pass {
                EXIT_PASS
            } else {
                for c in summary.failed() {
                    eprintln!("check failed: {}", c.name);
                }
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn run_args(args: &Args) -> Result<Summary, CliError> {
    let cfg = resolve_args(args)?;
    let output = run_experiment(&cfg)?;
    output.write(&cfg.out())?;
    Ok(output.summary)
}
