//! Command-line front end for `epigauge`.
//!
//! Subcommands: `gauge`, `certify`, `demo`, `sweep`. Each returns an
//! [`Outcome`] holding the text to print and the process exit code:
//! 0 all checks pass, 2 parse error, 3 precondition or window failure,
//! 4 oracle cap exceeded, 5 certificate inconsistency.

pub mod commands;
pub mod error;
pub mod record;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
pub use record::CertificateRecord;
pub use spec::ProblemSpec;

#[derive(Debug, Parser)]
#[command(name = "epigauge", version, about = "Certified epigraphic gauges and displacement bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(Debug, Clone, Args, Default)]
pub struct GlobalOpts {
    /// Problem description (TOML).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,

    /// Base lattice step (overrides the problem file).
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,

    /// Level lattice step (overrides the problem file).
    #[arg(long, global = true)]
    pub level_step: Option<f64>,

    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for lattice scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Emit CSV instead of text where a table is produced.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certified gauge bound next to the lattice oracle value.
    Gauge,
    /// Full pipeline: gauge, window checks, displacement bound.
    Certify,
    /// Build one of the explicit constructions and verify its properties.
    Demo(DemoArgs),
    /// Displacement sweep of the sharpness family, as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Impossibility,
    Sharpness,
    Strictness,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    pub name: DemoName,

    /// Base radius R.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,

    /// Level bound M.
    #[arg(long, default_value_t = 2.0)]
    pub level: f64,

    /// Amplitude A.
    #[arg(long, default_value_t = 5.0)]
    pub amplitude: f64,

    /// Query points: coordinates separated by ',', points by ';'.
    #[arg(long, default_value = "-0.5;0.5", allow_hyphen_values = true)]
    pub queries: String,

    /// Bump site (auto-selected when absent).
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,

    /// Growth modulus μ.
    #[arg(long, default_value_t = 2.0)]
    pub mu: f64,

    /// Perturbation size δ of the single-δ checks.
    #[arg(long, default_value_t = 0.02)]
    pub delta: f64,

    /// Sweep values of δ, comma separated (default: 10 log-spaced in [1e-5, 1e-2]).
    #[arg(long)]
    pub deltas: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Growth modulus μ (overrides the problem file).
    #[arg(long)]
    pub mu: Option<f64>,

    /// Values of δ, comma separated.
    #[arg(long)]
    pub deltas: Option<String>,

    /// Log-spaced δ range as `lo,hi,count`.
    #[arg(long)]
    pub log_range: Option<String>,
}

/// Result of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    /// Extra diagnostics for stderr.
    pub notes: String,
    pub exit_code: i32,
}

/// Runs a parsed command, inside a dedicated thread pool when `--threads`
/// is given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.global.threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            pool.install(|| commands::dispatch(cli))
        }
        None => commands::dispatch(cli),
    }
}
