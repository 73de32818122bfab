//! Semidefinite programs for atomic norm minimization.
//!
//! Both the decoupled program (two one-level Toeplitz blocks around the
//! snapshot) and the vectorized baseline (one two-level Toeplitz block around
//! `vec(X)`) are solved by the same alternating-direction splitting: a closed
//! form update of the structured block, one projection onto the PSD cone, and
//! a dual ascent step.

mod admm;
mod decoupled;
mod vectorized;

use faer::Side;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMat};
use crate::toeplitz::{HermToeplitz, TwoLevelToeplitz};

pub use decoupled::{
    extract_dual_certificate, solve_decoupled_exact, solve_decoupled_regularized,
    DecoupledSolver,
};
pub use vectorized::{solve_vectorized, solve_vectorized_observed, solve_vectorized_regularized, VectorizedSolution};

/// Splitting solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub penalty_rho: f64,
    pub verbose: bool,
    /// Above this many array elements the vectorized baseline logs a warning.
    pub vectorized_size_cap: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            penalty_rho: 1.0,
            verbose: false,
            vectorized_size_cap: 256,
        }
    }
}

impl SolverSettings {
    /// Same settings with both tolerances set to `tol`.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("penalty_rho", self.penalty_rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Output of the decoupled program.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub u_x: HermToeplitz,
    pub u_y: HermToeplitz,
    pub x_hat: ComplexMat,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// `n_x × n_y` dual block scaled into a dual-polynomial coefficient
    /// matrix; absent when the solver stopped early.
    pub dual_certificate_matrix: Option<ComplexMat>,
}

impl SdpSolution {
    pub(crate) fn zero(n_x: usize, n_y: usize) -> Self {
        Self {
            u_x: HermToeplitz::zeros(n_x),
            u_y: HermToeplitz::zeros(n_y),
            x_hat: ComplexMat::zeros(n_x, n_y),
            objective: 0.0,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
            dual_certificate_matrix: Some(ComplexMat::zeros(n_x, n_y)),
        }
    }

    /// `[[T(u_y), X̂ᴴ], [X̂, T(u_x)]]`.
    pub fn block_matrix(&self) -> ComplexMat {
        block_matrix(&self.u_x, &self.u_y, &self.x_hat)
    }

    /// Smallest eigenvalue of [`Self::block_matrix`].
    pub fn min_block_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigen(&self.block_matrix())?.min_value())
    }
}

pub(crate) fn block_matrix(u_x: &HermToeplitz, u_y: &HermToeplitz, x: &ComplexMat) -> ComplexMat {
    let (n_x, n_y) = (u_x.len(), u_y.len());
    let m = n_x + n_y;
    ComplexMat::from_fn(m, m, |i, j| match (i < n_y, j < n_y) {
        (true, true) => u_y.entry(i, j),
        (false, false) => u_x.entry(i - n_y, j - n_y),
        (false, true) => x[(i - n_y, j)],
        (true, false) => x[(j - n_y, i)].conj(),
    })
}

/// Frobenius-nearest PSD matrix: negative eigenvalues of the Hermitian part
/// clipped to zero.
pub fn psd_project(h: &ComplexMat) -> Result<ComplexMat> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (h.nrows(), h.nrows()),
            found: h.shape(),
        });
    }
    let herm = linalg::to_faer(&linalg::hermitian_part(h));
    let mut out = faer::Mat::zeros(h.nrows(), h.nrows());
    admm::psd_split(herm.as_ref(), out.as_mut())?;
    Ok(linalg::from_faer(out.as_ref()))
}

/// Default regularization weight `σ·sqrt(n_x n_y · ln(n_x n_y))` for noise
/// of per-entry standard deviation `sigma`.
pub fn lambda_heuristic(sigma: f64, n_x: usize, n_y: usize) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    let n = (n_x * n_y) as f64;
    Ok(sigma * (n * n.ln()).sqrt())
}

pub(crate) fn min_eigenvalue(m: faer::MatRef<'_, num_complex::Complex64>) -> Result<f64> {
    let vals = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

#[allow(dead_code)]
pub(crate) fn two_level_block(v: f64, u: &TwoLevelToeplitz, x: &ComplexMat) -> ComplexMat {
    let n = u.size();
    ComplexMat::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, 0) => num_complex::Complex64::new(v, 0.0),
        (0, j) => x[j - 1].conj(),
        (i, 0) => x[i - 1],
        (i, j) => u.entry(i - 1, j - 1),
    })
}
