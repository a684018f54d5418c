//! `cy`: build Chung-Yao lattices, check the interpolation identities and
//! run convergence experiments from a JSON configuration.

mod commands;
mod config;
mod expr;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(#[from] cy_core::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_degeneracy() => 3,
            CliError::Core(_) => 2,
            CliError::Failed(_) => 4,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[derive(Parser, Debug)]
#[command(name = "cy", version, about = "Chung-Yao lattice interpolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Tolerance for identity checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Exactness degree of the simplex quadrature rule.
    #[arg(long = "quad-degree")]
    pub quad_degree: Option<usize>,
    /// Worker threads (CY_THREADS takes precedence).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long = "s-min")]
    pub s_min: Option<u64>,
    #[arg(long = "s-max")]
    pub s_max: Option<u64>,
    /// Minimum N-subset volume for the (C2) verdict.
    #[arg(long = "c2-min")]
    pub c2_min: Option<f64>,
    /// Seed for random families and sample points.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print vertices, lines, n_K vectors and the general-position certificate.
    Lattice {
        #[command(flatten)]
        common: Common,
        /// Index of the family to build (defaults to the first s).
        #[arg(long)]
        s: Option<u64>,
        /// Also write the lattice as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity checks on one lattice.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<u64>,
        /// Move one stored vertex off its hyperplanes before interpolating.
        #[arg(long = "fault-inject")]
        fault_inject: bool,
        /// Flip the sign of one hyperplane and every n_K.
        #[arg(long = "sign-flip")]
        sign_flip: bool,
    },
    /// Interpolate along the s range and write one CSV row per s.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the explicit error bounds along the s range.
    Rate {
        #[command(flatten)]
        common: Common,
    },
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("CY_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Validation(format!("CY_THREADS: not a thread count: {v:?}"))),
        _ => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Lattice { common, .. }
        | Command::Verify { common, .. }
        | Command::Converge { common, .. }
        | Command::Rate { common } => common.clone(),
    };
    if let Some(n) = thread_count(common.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    let cfg = config::Config::load(&common.config)?;
    match cli.command {
        Command::Lattice { s, out, .. } => commands::lattice(&cfg, &common, s, out),
        Command::Verify {
            s,
            fault_inject,
            sign_flip,
            ..
        } => commands::verify(&cfg, &common, s, fault_inject, sign_flip),
        Command::Converge { out, .. } => commands::converge(&cfg, &common, out),
        Command::Rate { .. } => commands::rate(&cfg, &common),
    }
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
