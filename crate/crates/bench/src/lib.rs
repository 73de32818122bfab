//! Desk-scale experiments: solver runtime against array size, recovery of a
//! single scenario, and Monte Carlo MSE against SNR.
//!
//! Every trial derives its own seed from the base seed and its position in
//! the sweep, so results do not depend on the number of worker threads or
//! the order in which trials finish.

mod records;

use std::time::Instant;

use danm_core::array::{required_frequency_separation, ArrayGeometry, SeparationMetric};
use danm_core::metrics::{max_pair_error, mean_squared_error};
use danm_core::pipeline::{estimate, Fit, Method, PipelineEstimate, PipelineOptions};
use danm_core::scenario::{Scenario, SeparatedDraw};
use danm_core::sdp::{lambda_heuristic, solve_vectorized, DecoupledSolver, SolverSettings};
use danm_core::toeplitz::vectorize;
use danm_core::{PairedEstimate, SourceSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use records::{
    read_mse_csv, read_runtime_csv, write_mse_csv, write_runtime_csv, MseRecord, RuntimeRecord,
    MSE_HEADER, RUNTIME_HEADER,
};

/// Environment variable holding the worker count of the trial pool.
pub const THREADS_ENV: &str = "DANM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] danm_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` inside a pool sized by [`THREADS_ENV`] when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    match threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                f()
            }
        },
        _ => f(),
    }
}

/// How source spacing is chosen for generated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Spacing {
    /// The recovery-theorem bound in the given unit; fails when infeasible.
    Theorem(SeparationMetric),
    /// `c / n` in normalized frequency.
    PerElement(f64),
}

impl Spacing {
    /// Minimum wrap separation in frequency units for an `n`-element axis.
    pub fn frequency_separation(self, n: usize) -> Result<f64> {
        Ok(match self {
            Spacing::Theorem(metric) => required_frequency_separation(n, metric)?,
            Spacing::PerElement(c) => c / n as f64,
        })
    }

    pub fn draw(self, geometry: ArrayGeometry, k: usize) -> Result<SeparatedDraw> {
        let mut draw = SeparatedDraw::new(geometry, k, 0.0);
        draw.min_sep = (
            self.frequency_separation(geometry.n_x)?,
            self.frequency_separation(geometry.n_y)?,
        );
        Ok(draw)
    }
}

/// Solver configuration for the runtime sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeOptions {
    pub runs: usize,
    pub settings: SolverSettings,
    pub spacing: Spacing,
    pub methods: Vec<Method>,
}

impl Default for RuntimeOptions {
    fn default() -> Self {
        Self {
            runs: 1,
            settings: SolverSettings::default(),
            spacing: Spacing::PerElement(1.0),
            methods: vec![Method::Decoupled, Method::Vectorized],
        }
    }
}

/// Wall time of the SDP solve for each size, method and run.
///
/// Both methods see the same noise-free snapshot per `(n, run)`. Sizes whose
/// element count exceeds the vectorized cap produce a capped record instead
/// of a solve. Runs execute sequentially so timings do not compete.
pub fn run_runtime_sweep(sizes: &[usize], k: usize, seed: u64, opts: &RuntimeOptions) -> Result<Vec<RuntimeRecord>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Invalid(format!("sizes must be strictly ascending, got {sizes:?}")));
    }
    if opts.runs == 0 {
        return Err(BenchError::Invalid("runs must be at least 1".into()));
    }
    let mut out = Vec::new();
    for &n in sizes {
        let geom = ArrayGeometry::square(n)?;
        let draw = opts.spacing.draw(geom, k)?;
        for run in 0..opts.runs {
            let scenario = draw.scenario(mix_seed(seed, (n * 1000 + run) as u64), None)?;
            let x = scenario.clean_signal()?;
            for &method in &opts.methods {
                out.push(time_solve(method, n, &x, &opts.settings)?);
            }
        }
    }
    if !vectorized_medians_monotone(&out) {
        log::warn!("vectorized median wall time decreases with n; timings look unreliable");
    }
    Ok(out)
}

fn time_solve(method: Method, n: usize, x: &danm_core::ComplexMat, settings: &SolverSettings) -> Result<RuntimeRecord> {
    match method {
        Method::Decoupled => {
            let solver = DecoupledSolver::new(settings.clone());
            let t = Instant::now();
            let sol = solver.solve_exact(x)?;
            let wall = t.elapsed().as_secs_f64();
            Ok(RuntimeRecord::timed(n, method, wall, sol.iterations, sol.converged))
        }
        Method::Vectorized => {
            if n * n > settings.vectorized_size_cap {
                return Ok(RuntimeRecord::capped(n));
            }
            let v = vectorize(x);
            let t = Instant::now();
            let sol = solve_vectorized(&v, n, n, settings)?;
            let wall = t.elapsed().as_secs_f64();
            Ok(RuntimeRecord::timed(n, method, wall, sol.iterations, sol.converged))
        }
    }
}

/// Median wall time per `(n, method)`, skipping capped records.
pub fn median_wall_seconds(records: &[RuntimeRecord], n: usize, method: Method) -> Option<f64> {
    let mut t: Vec<f64> = records
        .iter()
        .filter(|r| r.n == n && r.method == method)
        .filter_map(|r| r.wall_seconds)
        .collect();
    if t.is_empty() {
        return None;
    }
    t.sort_by(f64::total_cmp);
    let mid = t.len() / 2;
    Some(if t.len() % 2 == 1 { t[mid] } else { 0.5 * (t[mid - 1] + t[mid]) })
}

/// Whether the vectorized median time is nondecreasing in `n`.
pub fn vectorized_medians_monotone(records: &[RuntimeRecord]) -> bool {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let medians: Vec<f64> = sizes
        .iter()
        .filter_map(|&n| median_wall_seconds(records, n, Method::Vectorized))
        .collect();
    medians.windows(2).all(|w| w[0] <= w[1])
}

/// Fit used for a snapshot: exact when noise-free, otherwise regularized
/// with the heuristic weight for the known noise level.
pub fn default_fit(noise_variance: f64, n_x: usize, n_y: usize) -> Result<Fit> {
    if noise_variance == 0.0 {
        return Ok(Fit::Exact);
    }
    Ok(Fit::Regularized { lambda: lambda_heuristic(noise_variance.sqrt(), n_x, n_y)? })
}

/// Estimated and true sources of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub truth: SourceSet,
    pub estimate: PairedEstimate,
    /// Largest per-axis wrap error over optimally matched pairs.
    pub max_error: f64,
    pub converged: bool,
}

/// Synthesize, corrupt, solve, decompose and pair a single scenario.
///
/// The source count is taken from the scenario and the fit from its noise
/// level.
pub fn run_recovery_scatter(scenario: &Scenario, method: Method, settings: &SolverSettings) -> Result<(ScatterRecord, PipelineEstimate)> {
    let snap = scenario.snapshot()?;
    let opts = PipelineOptions {
        method,
        fit: default_fit(snap.noise_variance, scenario.n_x, scenario.n_y)?,
        order: Some(scenario.sources.len()),
        settings: settings.clone(),
        ..Default::default()
    };
    let est = estimate(&snap.y, &snap.observation, &opts)?;
    let truth = scenario.source_set();
    let record = ScatterRecord {
        max_error: max_pair_error(&est.estimate.pairs, &truth),
        estimate: est.estimate.clone(),
        truth,
        converged: est.converged,
    };
    Ok((record, est))
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub methods: Vec<Method>,
    pub settings: SolverSettings,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { methods: vec![Method::Decoupled], settings: SolverSettings::default() }
    }
}

/// Mean squared wrap error against SNR.
///
/// The template fixes geometry and sources; each `(snr, trial)` draws fresh
/// noise from a seed derived from the template seed, shared across methods
/// so they see identical data. Unconverged or failed trials are excluded
/// from the mean and counted in `excluded`.
pub fn run_mc_mse(snrs: &[f64], trials: usize, template: &Scenario, opts: &McOptions) -> Result<Vec<MseRecord>> {
    if trials == 0 {
        return Err(BenchError::Invalid("trials must be at least 1".into()));
    }
    template.validate()?;
    if template.sources.is_empty() {
        return Err(BenchError::Invalid("template has no sources".into()));
    }
    if let Some(bad) = snrs.iter().find(|s| !s.is_finite()) {
        return Err(danm_core::Error::NonFiniteSnr(*bad).into());
    }
    let truth = template.source_set();
    let jobs: Vec<(usize, usize, Method)> = (0..snrs.len())
        .flat_map(|s| (0..trials).flat_map(move |t| opts.methods.iter().map(move |&m| (s, t, m))))
        .collect();
    let outcomes: Vec<Option<f64>> = with_pool(|| {
        jobs.par_iter()
            .map(|&(s, t, method)| {
                let mut sc = template.clone();
                sc.snr_db = Some(snrs[s]);
                sc.seed = mix_seed(template.seed, (s * 1_000_003 + t) as u64);
                match run_recovery_scatter(&sc, method, &opts.settings) {
                    Ok((_, est)) if est.converged => mean_squared_error(&est.estimate.pairs, &truth),
                    Ok(_) => None,
                    Err(e) => {
                        log::debug!("trial {t} at {} dB ({method}) failed: {e}", snrs[s]);
                        None
                    }
                }
            })
            .collect()
    });
    let mut out = Vec::new();
    for (s, &snr_db) in snrs.iter().enumerate() {
        for &method in &opts.methods {
            let vals: Vec<f64> = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((js, _, jm), _)| *js == s && *jm == method)
                .filter_map(|(_, o)| *o)
                .collect();
            let excluded = trials - vals.len();
            if excluded > 0 {
                log::warn!("{snr_db} dB, {method}: excluded {excluded} of {trials} trials");
            }
            let mse = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            out.push(MseRecord { snr_db, method, mse, trials, excluded });
        }
    }
    Ok(out)
}

/// MSE of the noise-free template, a floor set by solver tolerance.
pub fn noise_free_floor(template: &Scenario, method: Method, settings: &SolverSettings) -> Result<f64> {
    let mut sc = template.clone();
    sc.snr_db = None;
    let (rec, _) = run_recovery_scatter(&sc, method, settings)?;
    Ok(mean_squared_error(&rec.estimate.pairs, &rec.truth).unwrap_or(f64::NAN))
}
