use faer::{MatMut, MatRef};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::admm::{self, Structure};
use super::{SdpSolution, SolverSettings};
use crate::array::ObservationModel;
use crate::error::{Error, Result};
use crate::linalg::ComplexMat;
use crate::toeplitz::HermToeplitz;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fidelity {
    /// Observed entries of X equal the data.
    Exact,
    /// `‖Y − L(X)‖²_F` in the objective.
    LeastSquares,
}

/// Block `[[T(u_y), Xᴴ], [X, T(u_x)]]` with trace weight `c` on both
/// Toeplitz blocks.
struct DecoupledBlock {
    c: f64,
    data: ComplexMat,
    observed: DMatrix<bool>,
    fidelity: Fidelity,
    u_x: HermToeplitz,
    u_y: HermToeplitz,
    x: ComplexMat,
}

impl DecoupledBlock {
    fn n_x(&self) -> usize {
        self.data.nrows()
    }

    fn n_y(&self) -> usize {
        self.data.ncols()
    }

    fn objective(&self) -> f64 {
        let reg = self.c * (self.u_x.trace() + self.u_y.trace());
        match self.fidelity {
            Fidelity::Exact => reg,
            Fidelity::LeastSquares => {
                let mut fit = 0.0;
                for j in 0..self.n_y() {
                    for i in 0..self.n_x() {
                        if self.observed[(i, j)] {
                            fit += (self.data[(i, j)] - self.x[(i, j)]).norm_sqr();
                        }
                    }
                }
                reg + fit
            }
        }
    }
}

impl Structure for DecoupledBlock {
    fn dim(&self) -> usize {
        self.n_x() + self.n_y()
    }

    fn update(&mut self, b: MatRef<'_, Complex64>, rho: f64) {
        let (n_x, n_y) = (self.n_x(), self.n_y());
        let shift = self.c / rho;
        self.u_y = HermToeplitz::project_faer(b.submatrix(0, 0, n_y, n_y), shift);
        self.u_x = HermToeplitz::project_faer(b.submatrix(n_y, n_y, n_x, n_x), shift);
        for j in 0..n_y {
            for i in 0..n_x {
                let avg = (b[(n_y + i, j)] + b[(j, n_y + i)].conj()) * 0.5;
                self.x[(i, j)] = if !self.observed[(i, j)] {
                    avg
                } else {
                    match self.fidelity {
                        Fidelity::Exact => self.data[(i, j)],
                        Fidelity::LeastSquares => (self.data[(i, j)] + avg * rho) / (1.0 + rho),
                    }
                };
            }
        }
    }

    fn write(&self, mut phi: MatMut<'_, Complex64>) {
        let (n_x, n_y) = (self.n_x(), self.n_y());
        self.u_y.write_into(phi.as_mut().submatrix_mut(0, 0, n_y, n_y));
        self.u_x.write_into(phi.as_mut().submatrix_mut(n_y, n_y, n_x, n_x));
        for j in 0..n_y {
            for i in 0..n_x {
                let z = self.x[(i, j)];
                phi[(n_y + i, j)] = z;
                phi[(j, n_y + i)] = z.conj();
            }
        }
    }

    fn shift_diagonal(&mut self, delta: f64) {
        self.u_x.shift_diagonal(delta);
        self.u_y.shift_diagonal(delta);
    }
}

/// Decoupled atomic-norm program with optional warm start.
#[derive(Debug, Clone, Default)]
pub struct DecoupledSolver {
    settings: SolverSettings,
    warm_start: Option<(HermToeplitz, HermToeplitz)>,
}

impl DecoupledSolver {
    pub fn new(settings: SolverSettings) -> Self {
        Self {
            settings,
            warm_start: None,
        }
    }

    /// Seeds the Toeplitz blocks, e.g. with the atomic-decomposition witness
    /// `T(u_x) = Σ|s_k| sqrt(n_y/n_x) a aᴴ`.
    pub fn warm_start(mut self, u_x: HermToeplitz, u_y: HermToeplitz) -> Self {
        self.warm_start = Some((u_x, u_y));
        self
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Minimizes `(tr T(u_x) + tr T(u_y)) / (2 sqrt(n_x n_y))` with the block
    /// constraint and `X` fixed.
    pub fn solve_exact(&self, x: &ComplexMat) -> Result<SdpSolution> {
        self.solve_exact_observed(x, &ObservationModel::Full)
    }

    /// Exact program where only observed entries of `X` are pinned to `y`.
    pub fn solve_exact_observed(&self, y: &ComplexMat, obs: &ObservationModel) -> Result<SdpSolution> {
        let c = 1.0 / (2.0 * ((y.nrows() * y.ncols()) as f64).sqrt());
        self.run(y, obs, c, Fidelity::Exact)
    }

    /// Minimizes `λ/(2 sqrt(n_x n_y)) (tr T(u_x) + tr T(u_y)) + ‖Y − L(X)‖²_F`.
    pub fn solve_regularized(&self, y: &ComplexMat, obs: &ObservationModel, lambda: f64) -> Result<SdpSolution> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        let c = lambda / (2.0 * ((y.nrows() * y.ncols()) as f64).sqrt());
        self.run(y, obs, c, Fidelity::LeastSquares)
    }

    fn run(&self, y: &ComplexMat, obs: &ObservationModel, c: f64, fidelity: Fidelity) -> Result<SdpSolution> {
        self.settings.validate()?;
        let (n_x, n_y) = y.shape();
        if n_x == 0 || n_y == 0 {
            return Err(Error::InvalidInput("empty snapshot".into()));
        }
        obs.check_shape(y.shape())?;
        let observed = DMatrix::from_fn(n_x, n_y, |i, j| obs.is_observed(i, j));
        let data = y.zip_map(&observed, |v, o| if o { v } else { Complex64::ZERO });
        if data.iter().all(|z| *z == Complex64::ZERO) {
            return Ok(SdpSolution::zero(n_x, n_y));
        }

        let (u_x, u_y, warm) = match &self.warm_start {
            Some((ux, uy)) => {
                if ux.len() != n_x || uy.len() != n_y {
                    return Err(Error::ShapeMismatch {
                        expected: (n_x, n_y),
                        found: (ux.len(), uy.len()),
                    });
                }
                (ux.clone(), uy.clone(), true)
            }
            None => (HermToeplitz::zeros(n_x), HermToeplitz::zeros(n_y), false),
        };
        let mut block = DecoupledBlock {
            c,
            x: data.clone(),
            data,
            observed,
            fidelity,
            u_x,
            u_y,
        };
        let outcome = admm::solve(&mut block, &self.settings, warm)?;
        admm::restore_feasibility(&mut block)?;

        let dual_certificate_matrix = (outcome.converged && c > 0.0).then(|| {
            let scale = -1.0 / (c * ((n_x * n_y) as f64).sqrt());
            ComplexMat::from_fn(n_x, n_y, |i, j| outcome.dual[(n_y + i, j)] * scale)
        });
        Ok(SdpSolution {
            objective: block.objective(),
            u_x: block.u_x,
            u_y: block.u_y,
            x_hat: block.x,
            iterations: outcome.iterations,
            primal_residual: outcome.primal_residual,
            dual_residual: outcome.dual_residual,
            converged: outcome.converged,
            dual_certificate_matrix,
        })
    }
}

/// Decoupled program with `X` fixed to the input.
pub fn solve_decoupled_exact(x: &ComplexMat, settings: &SolverSettings) -> Result<SdpSolution> {
    DecoupledSolver::new(settings.clone()).solve_exact(x)
}

/// Regularized decoupled program on observation `y`.
pub fn solve_decoupled_regularized(
    y: &ComplexMat,
    obs: &ObservationModel,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<SdpSolution> {
    DecoupledSolver::new(settings.clone()).solve_regularized(y, obs, lambda)
}

/// Dual-polynomial coefficients `Q` of a converged solve.
pub fn extract_dual_certificate(sol: &SdpSolution) -> Result<ComplexMat> {
    if !sol.converged {
        return Err(Error::CertificateUnavailable("solver stopped before convergence"));
    }
    sol.dual_certificate_matrix
        .clone()
        .ok_or(Error::CertificateUnavailable("solve carries no dual block"))
}
