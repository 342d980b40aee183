//! Batch driver for the sand-transport solvers and studies.
//!
//! Exit codes: 0 success, 1 numerical failure (or a failed verdict from
//! `validate`), 2 configuration error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Hypothesis violations found by `validate`.
    #[error("{0}")]
    Verdict(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Verdict(_) | CliError::Output(_) => 1,
        }
    }
}

impl From<tidal_dunes::Error> for CliError {
    fn from(e: tidal_dunes::Error) -> Self {
        match e {
            tidal_dunes::Error::Io(io) => CliError::Output(io.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "tidal-dunes", version, about = "Degenerate sand-transport solvers and two-scale studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; omitted means the shipped defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `model.epsilon`.
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated epsilon ladder, overrides `twoscale.ladder`.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural hypotheses on the coefficients.
    Validate(Common),
    /// Solve the eps-problem and dump the trajectory.
    Solve(Common),
    /// Solve the regularized periodic cell problem (or its continuation ladders).
    Cell(Common),
    /// Solve the homogenized limit problem.
    Homogenize(Common),
    /// Two-scale convergence study along the epsilon ladder.
    Twoscale(Common),
    /// Corrector study along the epsilon ladder.
    Corrector(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse("")?,
    };
    if let Some(eps) = common.eps {
        cfg.model.epsilon = eps;
    }
    if let Some(ladder) = &common.ladder {
        cfg.twoscale.ladder = ladder.clone();
    }
    Ok(cfg)
}

type Handler = fn(&RunConfig, &std::path::Path) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, f): (&Common, Handler) = match &cli.command {
        Command::Validate(c) => (c, commands::validate),
        Command::Solve(c) => (c, commands::solve),
        Command::Cell(c) => (c, commands::cell),
        Command::Homogenize(c) => (c, commands::homogenize),
        Command::Twoscale(c) => (c, commands::twoscale),
        Command::Corrector(c) => (c, commands::corrector),
    };
    let cfg = load(common)?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", common.out.display())))?;
    f(&cfg, &common.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
