//! `danm`: simulate snapshots, estimate and certify 2D directions of
//! arrival, and run the benchmark sweeps.

mod canonical;
mod commands;
mod error;
mod plot;
mod wire;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use danm_core::{Method, SolverSettings};

use crate::commands::*;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "danm", version, about = "Gridless 2D DOA estimation by decoupled atomic norm minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Iteration limit of the splitting solver.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Absolute and relative stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Initial penalty parameter.
    #[arg(long)]
    rho: Option<f64>,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolverSettings, CliError> {
        let mut s = SolverSettings::default();
        if let Some(m) = self.max_iters {
            s.max_iters = m;
        }
        if let Some(t) = self.tol {
            s = s.with_tol(t);
        }
        if let Some(r) = self.rho {
            s.penalty_rho = r;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a (noisy, masked) snapshot from a scenario file.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario SNR in dB.
        #[arg(long)]
        snr: Option<f64>,
        /// Override the scenario noise seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve, decompose and pair; writes a result record.
    Estimate {
        snapshot: PathBuf,
        #[arg(long, default_value = "decoupled")]
        method: Method,
        /// Regularization weight; defaults to exact fit for noise-free
        /// snapshots and the heuristic weight otherwise.
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of sources; estimated when omitted.
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also verify the dual certificate and embed the report.
        #[arg(long)]
        certify: bool,
        /// Certificate grid points per axis.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        cert_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the dual certificate stored in a result record.
    Certify {
        snapshot: PathBuf,
        result: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve time of both programs over a range of square array sizes.
    BenchRuntime {
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12,14,16")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum source spacing as a multiple of 1/n.
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, value_delimiter = ',', default_value = "decoupled,vectorized")]
        method: Vec<Method>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo MSE against SNR for a scenario template.
    McMse {
        template: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-5,0,5,10,15,20,25,30")]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_value = "decoupled")]
        method: Vec<Method>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a runtime or MSE table as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, snr, seed, out } => {
            simulate(&SimulateArgs { scenario, snr, seed, out })?;
        }
        Command::Estimate { snapshot, method, lambda, order, solver, certify, grid, cert_tol, out } => {
            estimate_cmd(&EstimateArgs {
                snapshot,
                method,
                lambda,
                order,
                settings: solver.settings()?,
                certify,
                grid,
                cert_tol,
                out,
            })?;
        }
        Command::Certify { snapshot, result, grid, tol, out } => {
            certify_cmd(&CertifyArgs { snapshot, result, grid, tol, out })?;
        }
        Command::BenchRuntime { sizes, k, runs, seed, spacing, method, solver, out } => {
            bench_runtime(&RuntimeArgs { sizes, k, runs, seed, spacing, methods: method, settings: solver.settings()?, out })?;
        }
        Command::McMse { template, snr, trials, seed, method, solver, out } => {
            mc_mse(&MseArgs { template, snrs: snr, trials, seed, methods: method, settings: solver.settings()?, out })?;
        }
        Command::Plot { csv, out } => {
            plot(&PlotArgs { csv, out })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("danm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
