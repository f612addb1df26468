//! `euler2d <command> --config <file> [--seed S] [--out DIR] [--workers W]`
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure or blow-up,
//! 4 io error. `APP_WORKERS` is the fallback for `--workers`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod io;

use config::ExperimentConfig;

/// Failure categories mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<euler2d::Error> for Failure {
    fn from(e: euler2d::Error) -> Self {
        match e {
            euler2d::Error::InvalidArgument(m) => Failure::Config(m),
            euler2d::Error::BlowUp { .. } | euler2d::Error::NumericalFailure(_) => {
                Failure::Numerical(e.to_string())
            }
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing); defaults to the current one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; APP_WORKERS is the fallback, all cores the default.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Parser, Debug)]
#[command(
    name = "euler2d",
    version,
    about = "Truncated 2D Euler laboratory: spectral and grid simulations, \
             invariance checks, and exit-time density estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the spectral mode system (deterministic or noisy).
    SimulateSpectral(RunArgs),
    /// Run the configuration-space vorticity solver.
    SimulateGrid(RunArgs),
    /// Evaluate invariance residuals at random states.
    CheckInvariance(RunArgs),
    /// Exit-time Monte Carlo estimate of the perturbed density at one point.
    EstimateDensity(RunArgs),
    /// Density estimates over a decreasing noise-level grid.
    SweepEpsilon(RunArgs),
    /// Multi-seed condensation experiment.
    Condensation(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateSpectral(_) => "simulate-spectral",
            Command::SimulateGrid(_) => "simulate-grid",
            Command::CheckInvariance(_) => "check-invariance",
            Command::EstimateDensity(_) => "estimate-density",
            Command::SweepEpsilon(_) => "sweep-epsilon",
            Command::Condensation(_) => "condensation",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::SimulateSpectral(a)
            | Command::SimulateGrid(a)
            | Command::CheckInvariance(a)
            | Command::EstimateDensity(a)
            | Command::SweepEpsilon(a)
            | Command::Condensation(a) => a,
        }
    }
}

fn configure_workers(args: &RunArgs) -> Result<(), Failure> {
    let workers = args.workers.or_else(|| {
        std::env::var("APP_WORKERS").ok().and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(w) = workers {
        if w == 0 {
            return Err(Failure::Config("workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot configure {w} workers: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let args = cli.command.args();
    configure_workers(args)?;

    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Failure::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut experiment =
        config::parse_config(cli.command.name(), &text).map_err(Failure::Config)?;
    if let Some(seed) = args.seed {
        experiment.set_seed(seed);
    }
    let seed = experiment.seed();

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))?;

    let start = Instant::now();
    let summary = match &experiment {
        ExperimentConfig::SimulateSpectral(c) => commands::run_simulate_spectral(c, &out)?,
        ExperimentConfig::SimulateGrid(c) => commands::run_simulate_grid(c, &out)?,
        ExperimentConfig::CheckInvariance(c) => commands::run_check_invariance(c, &out)?,
        ExperimentConfig::EstimateDensity(c) => commands::run_estimate_density(c, &out)?,
        ExperimentConfig::SweepEpsilon(c) => commands::run_sweep_epsilon(c, &out)?,
        ExperimentConfig::Condensation(c) => commands::run_condensation(c, &out)?,
    };
    println!(
        "{} seed={seed} {summary} wall={:.2}s",
        cli.command.name(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
