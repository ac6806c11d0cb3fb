//! Batch front end: body specifications, verification suites and report
//! emission.

pub mod emit;
pub mod spec;
pub mod suite;

use std::path::PathBuf;

use clap::Parser;

pub use emit::{emit_report, Format};
pub use spec::{parse_body_spec, parse_pairs, BodySpec};
pub use suite::{default_pairs, run_suite, SuiteConfig, SuiteId};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid body specification: {0}")]
    Spec(String),
    #[error("output error: {0}")]
    Output(String),
}

#[derive(Debug, Parser)]
#[command(name = "geotomo", about = "Volume comparison checks from sections and projections")]
pub struct Args {
    #[arg(long, value_enum)]
    pub suite: SuiteId,
    /// Dimension of the built-in pairs (ignored with --bodies)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Order of the fractional Laplacian (fractional suites only)
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = geotomo::config::DEFAULT_LMAX)]
    pub lmax: usize,
    /// Polar nodes per angle (default: per-dimension table)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Relative verdict tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Randomized pairs per dimension in the built-in list
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    /// JSON file with an array of [K, L] body-spec pairs
    #[arg(long)]
    pub bodies: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl Args {
    pub fn config(&self) -> SuiteConfig {
        let mut cfg = SuiteConfig::new(self.suite);
        cfg.dim = self.dim;
        cfg.alpha = self.alpha;
        cfg.lmax = self.lmax;
        cfg.resolution = self.resolution;
        cfg.seed = self.seed;
        cfg.count = self.count;
        if let Some(t) = self.tol {
            cfg.tolerances.verdict_rel = t;
        }
        cfg
    }
}

/// Runs the suite described by `args`.
pub fn execute(args: &Args) -> Result<(SuiteConfig, Vec<geotomo::VerifierReport>), CliError> {
    let cfg = args.config();
    let pairs = match &args.bodies {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Spec(format!("cannot read {}: {e}", path.display())))?;
            parse_pairs(&text)?
        }
        None => default_pairs(&cfg),
    };
    let reports = run_suite(&cfg, &pairs)?;
    Ok((cfg, reports))
}

/// Runs the suite and renders the reports in the requested format.
pub fn run(args: &Args) -> Result<(String, Vec<geotomo::VerifierReport>), CliError> {
    let (cfg, reports) = execute(args)?;
    Ok((emit::render(&cfg, &reports, args.format)?, reports))
}
