//! Experiment CLI for the photonrc reservoir simulator.
//!
//! Exit codes: 0 success, 2 configuration problem (bad schema, unknown or
//! missing key, inconsistent values), 3 numerical failure (divergence,
//! non-convergence, ill-conditioned system), 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod runner;

use runner::Experiment;

/// Environment variable providing the default output directory.
const OUT_ENV: &str = "PHOTONRC_OUT";

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: the configuration is unusable.
    Config(String),
    /// Exit 3: the simulation failed numerically.
    Numerical(String),
    /// Exit 1: everything else (I/O, serialization).
    Other(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<photonrc::Error> for CliError {
    fn from(e: photonrc::Error) -> Self {
        use photonrc::Error::*;
        match e {
            InvalidParameter(_) | ShapeMismatch(_) | Construction(_) => {
                CliError::Config(e.to_string())
            }
            NoConvergence { .. } | StepTooCoarse { .. } | Diverged(_) | IllConditioned(_)
            | ZeroVariance | NonFinite(_) => CliError::Numerical(e.to_string()),
            Io(_) | Csv(_) => CliError::Other(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "photonrc", version, about = "Photonic reservoir computing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (flat TOML; a manifest.toml works too).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (falls back to PHOTONRC_OUT, then the config's
    /// out_dir, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set ridge_lambda=1e-4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured task on an echo-state reservoir.
    Esn(RunArgs),
    /// Run the configured task on a delay reservoir.
    Delay(RunArgs),
    /// Run the configured task on a cascaded reservoir.
    Cascade(RunArgs),
    /// Memory-capacity protocol on the configured reservoir.
    MemoryCapacity(RunArgs),
    /// NARMA10 benchmark on the configured reservoir.
    Narma(RunArgs),
    /// Mackey-Glass prediction on the configured reservoir.
    MackeyGlass(RunArgs),
    /// Offline-train / transfer-under-tolerance cascade experiment.
    Tolerance(RunArgs),
    /// Write the reservoir states (or DDE trajectory) as CSV.
    DumpStates(RunArgs),
}

impl Command {
    fn split(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::Esn(a) => (Experiment::Esn, a),
            Command::Delay(a) => (Experiment::Delay, a),
            Command::Cascade(a) => (Experiment::Cascade, a),
            Command::MemoryCapacity(a) => (Experiment::MemoryCapacity, a),
            Command::Narma(a) => (Experiment::Narma, a),
            Command::MackeyGlass(a) => (Experiment::MackeyGlass, a),
            Command::Tolerance(a) => (Experiment::Tolerance, a),
            Command::DumpStates(a) => (Experiment::DumpStates, a),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (experiment, args) = cli.command.split();
    let cfg = config::load_config(&args.config, args.seed, &args.set)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    runner::execute(experiment, &cfg, &out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photonrc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
