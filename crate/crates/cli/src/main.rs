//! `stokes-spec`: solve Laplacian/Stokes spectra on gridded domains and check
//! them against the analytic bounds.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config
//! error, 3 the eigensolver did not converge.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{CheckKind, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("eigensolver did not converge: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stokes-spec", version, about = "Stokes and Laplacian spectra with executable eigenvalue bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for eigenpairs; writes spectrum.json and eigenfunction blobs.
    Solve(Common),
    /// Run bound checks; exit code 1 if any fails.
    Check {
        #[command(flatten)]
        common: Common,
        /// Checks to run; overrides the config.
        #[arg(long, value_enum, value_delimiter = ',')]
        checks: Option<Vec<CheckKind>>,
    },
    /// Write the k, λ_k, Weyl ratio and sum-bound margin table.
    Report(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Solve(common) => {
            let cfg = load(&common)?;
            let out = cfg.out_dir(common.out.as_deref())?;
            commands::solve(&cfg, &out)
        }
        Command::Check { common, checks } => {
            let mut cfg = load(&common)?;
            if let Some(c) = checks {
                cfg.checks = c;
            }
            let out = cfg.out_dir(common.out.as_deref())?;
            commands::check(&cfg, &out)
        }
        Command::Report(common) => {
            let cfg = load(&common)?;
            let out = cfg.out_dir(common.out.as_deref())?;
            commands::report(&cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
