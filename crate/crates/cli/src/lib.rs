//! `proxnet`: analyze, solve, verify and trace recurrent proximal networks,
//! and compute Hopfield equilibria, from JSON model descriptions.
//!
//! Every command prints one JSON report on standard output. Exit codes:
//! 0 success, 1 verification failed, 2 internal or input error,
//! 3 precondition refused (not recurrent or not contractive),
//! 4 no convergence.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};

pub use commands::{execute, Outcome};
pub use config::{parse_config, parse_config_str, Config, HopfieldConfig, NetworkConfig};
pub use error::{CliError, ExitClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Weight norms, contraction conditions and monotonicity of I - W S.
    Analyze,
    /// Compute the fixed point and check it.
    Solve,
    /// Check a candidate layer trajectory against the inclusion system.
    Verify,
    /// Equilibrium of a Hopfield model, optionally with ODE simulations.
    Hopfield,
    /// Write the sequential iteration to CSV.
    Trace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Hopfield => "hopfield",
            Command::Trace => "trace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sequential,
    Block,
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sequential => "sequential",
            Method::Block => "block",
            Method::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Model description (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Solver tolerance; for `verify`, the inclusion tolerance (default 1e-8).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub method: Method,
    /// Seed for every random choice (norm estimates, simulation starts).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output for `trace` and `hopfield --simulate`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Candidate trajectory for `verify`: JSON array of per-block arrays.
    #[arg(long)]
    pub point: Option<PathBuf>,
    /// Inclusion tolerance applied to `solve` output.
    #[arg(long)]
    pub verify_tol: Option<f64>,
    /// Run RK4 simulations from random starts (`hopfield`).
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 3)]
    pub starts: usize,
    /// Include wall-clock timings (makes reports non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Parser)]
#[command(name = "proxnet", version, about = "Fixed points of recurrent proximal networks")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub args: RunArgs,
}

/// Parses arguments and runs one command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(cli.command.name(), &cli.args),
        Err(e) => Outcome {
            exit_code: if e.use_stderr() { ExitClass::Internal.code() } else { 0 },
            report: serde_json::Value::Null,
            error: Some(e.to_string()),
        },
    }
}
