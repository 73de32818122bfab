//! End-to-end estimation: solve, recover frequencies, pair.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, ObservationModel, Source, SourceSet};
use crate::decomp::{estimate_order, vandermonde_decompose, Music2d, DEFAULT_ORDER_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMat};
use crate::pairing::{pair_angles, PairedEstimate};
use crate::sdp::{
    solve_vectorized_observed, solve_vectorized_regularized, DecoupledSolver, SolverSettings,
};
use crate::toeplitz::{kron_steering, vectorize, HermToeplitz, TwoLevelToeplitz};

/// Which semidefinite program drives the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Decoupled,
    Vectorized,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Decoupled => "decoupled",
            Method::Vectorized => "vectorized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decoupled" => Ok(Method::Decoupled),
            "vectorized" => Ok(Method::Vectorized),
            other => Err(Error::InvalidInput(format!("unknown method '{other}' (decoupled|vectorized)"))),
        }
    }
}

/// Data fidelity of the program.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Fit {
    /// Observed entries are matched exactly.
    #[default]
    Exact,
    /// Atomic-norm denoising with weight `lambda`.
    Regularized { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub method: Method,
    pub fit: Fit,
    /// Number of sources; estimated from the Toeplitz spectra when `None`.
    pub order: Option<usize>,
    pub order_threshold: f64,
    pub settings: SolverSettings,
    /// MUSIC search grid per axis for the vectorized method; defaults to
    /// `max(64, 16 max(n_x, n_y))`.
    pub music_grid: Option<usize>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            method: Method::Decoupled,
            fit: Fit::Exact,
            order: None,
            order_threshold: DEFAULT_ORDER_THRESHOLD,
            settings: SolverSettings::default(),
            music_grid: None,
        }
    }
}

/// Soft warnings raised along the way; none of them abort the estimate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub off_unit_circle: bool,
    pub non_unique_decomposition: bool,
    pub order_disagreement: bool,
}

/// Structured part of the optimal point.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionBlocks {
    Decoupled { u_x: HermToeplitz, u_y: HermToeplitz },
    Vectorized { v: f64, u2d: TwoLevelToeplitz },
}

/// Result of [`estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineEstimate {
    pub method: Method,
    pub order: usize,
    pub estimate: PairedEstimate,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub x_hat: ComplexMat,
    pub blocks: SolutionBlocks,
    /// Dual-polynomial coefficients; decoupled method, converged solves only.
    pub dual_certificate: Option<ComplexMat>,
    pub diagnostics: Diagnostics,
}

fn check_order(geom: ArrayGeometry, order: usize) -> Result<()> {
    if order > geom.capacity() {
        return Err(Error::Capacity { order, capacity: geom.capacity() });
    }
    Ok(())
}

/// Runs the chosen program on `y` and extracts paired `(f_x, f_y, amp)`.
pub fn estimate(y: &ComplexMat, obs: &ObservationModel, opts: &PipelineOptions) -> Result<PipelineEstimate> {
    let geom = ArrayGeometry::new(y.nrows(), y.ncols())?;
    obs.check_shape(y.shape())?;
    if let Some(k) = opts.order {
        check_order(geom, k)?;
    }
    match opts.method {
        Method::Decoupled => estimate_decoupled(geom, y, obs, opts),
        Method::Vectorized => estimate_vectorized(geom, y, obs, opts),
    }
}

fn estimate_decoupled(geom: ArrayGeometry, y: &ComplexMat, obs: &ObservationModel, opts: &PipelineOptions) -> Result<PipelineEstimate> {
    let solver = DecoupledSolver::new(opts.settings.clone());
    let sol = match opts.fit {
        Fit::Exact => solver.solve_exact_observed(y, obs)?,
        Fit::Regularized { lambda } => solver.solve_regularized(y, obs, lambda)?,
    };
    let tx = sol.u_x.materialize();
    let ty = sol.u_y.materialize();
    let mut diagnostics = Diagnostics::default();
    let order = match opts.order {
        Some(k) => k,
        None => {
            let kx = estimate_order(&tx, opts.order_threshold)?;
            let ky = estimate_order(&ty, opts.order_threshold)?;
            if kx != ky {
                log::warn!("order estimates disagree: {kx} along x, {ky} along y; using the smaller");
                diagnostics.order_disagreement = true;
            }
            let k = kx.min(ky);
            check_order(geom, k)?;
            k
        }
    };
    let estimate = if order == 0 {
        PairedEstimate { pairs: SourceSet::default(), match_scores: vec![] }
    } else {
        let fx = vandermonde_decompose(&tx, order)?;
        let fy = vandermonde_decompose(&ty, order)?;
        diagnostics.off_unit_circle = fx.off_unit_circle || fy.off_unit_circle;
        diagnostics.non_unique_decomposition = fx.non_unique || fy.non_unique;
        pair_angles(&sol.x_hat, &fx.freqs, &fx.powers, &fy.freqs)?
    };
    Ok(PipelineEstimate {
        method: Method::Decoupled,
        order,
        estimate,
        objective: sol.objective,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        converged: sol.converged,
        dual_certificate: sol.dual_certificate_matrix.clone().filter(|_| sol.converged),
        x_hat: sol.x_hat,
        blocks: SolutionBlocks::Decoupled { u_x: sol.u_x, u_y: sol.u_y },
        diagnostics,
    })
}

fn estimate_vectorized(geom: ArrayGeometry, y: &ComplexMat, obs: &ObservationModel, opts: &PipelineOptions) -> Result<PipelineEstimate> {
    let size = geom.num_elements();
    if size > opts.settings.vectorized_size_cap {
        return Err(Error::SizeCap { size, cap: opts.settings.vectorized_size_cap });
    }
    let sol = match opts.fit {
        Fit::Exact => solve_vectorized_observed(y, obs, &opts.settings)?,
        Fit::Regularized { lambda } => solve_vectorized_regularized(y, obs, lambda, &opts.settings)?,
    };
    let mut diagnostics = Diagnostics::default();
    let order = match opts.order {
        Some(k) => k,
        None => {
            let k = estimate_order(&sol.u2d.materialize(), opts.order_threshold)?;
            check_order(geom, k)?;
            k
        }
    };
    let estimate = if order == 0 {
        PairedEstimate { pairs: SourceSet::default(), match_scores: vec![] }
    } else {
        let music = Music2d::new(&sol.u2d, order)?;
        diagnostics.non_unique_decomposition = music.eigengap_degenerate;
        let grid = opts.music_grid.unwrap_or(64.max(16 * geom.n_x.max(geom.n_y)));
        let peaks = music.peaks(grid, grid);
        joint_amplitudes(&sol.x_hat, &peaks)?
    };
    Ok(PipelineEstimate {
        method: Method::Vectorized,
        order,
        estimate,
        objective: sol.objective,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        converged: sol.converged,
        x_hat: sol.x_hat,
        blocks: SolutionBlocks::Vectorized { v: sol.v, u2d: sol.u2d },
        dual_certificate: None,
        diagnostics,
    })
}

/// Least-squares amplitudes of jointly located peaks. Joint peaks carry
/// their pairing, so every match score is 1.
fn joint_amplitudes(x_hat: &ComplexMat, peaks: &[(f64, f64)]) -> Result<PairedEstimate> {
    let (n_x, n_y) = x_hat.shape();
    let mut cols = Vec::with_capacity(peaks.len());
    for &(fx, fy) in peaks {
        // kron_steering conjugates the y-factor; the snapshot model uses a_N a_Mᴴ
        cols.push(kron_steering(n_x, n_y, fx, fy));
    }
    let a = ComplexMat::from_columns(&cols);
    let (pinv, rank) = linalg::pinv(&a, 1e-10);
    if rank < peaks.len() {
        return Err(Error::RankDeficient { requested: peaks.len(), detected: rank });
    }
    let s = pinv * vectorize(x_hat);
    let mut pairs: Vec<Source> = peaks
        .iter()
        .zip(s.iter())
        .map(|(&(fx, fy), &amp): (&(f64, f64), &Complex64)| Source::new(fx, fy, amp))
        .collect();
    pairs.sort_by(|a, b| a.f_x.total_cmp(&b.f_x).then(a.f_y.total_cmp(&b.f_y)));
    Ok(PairedEstimate { match_scores: vec![1.0; pairs.len()], pairs: SourceSet::new(pairs) })
}
