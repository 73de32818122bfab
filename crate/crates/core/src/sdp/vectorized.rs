use faer::{MatMut, MatRef};
use num_complex::Complex64;

use super::admm::{self, Structure};
use super::SolverSettings;
use crate::array::ObservationModel;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, ComplexVec};
use crate::toeplitz::{unvectorize, vectorize, TwoLevelToeplitz};

/// Output of the vectorized baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedSolution {
    pub v: f64,
    pub u2d: TwoLevelToeplitz,
    pub x_hat: ComplexMat,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

struct VectorizedBlock {
    n_x: usize,
    n_y: usize,
    c: f64,
    data: ComplexVec,
    observed: Vec<bool>,
    least_squares: bool,
    v: f64,
    u: TwoLevelToeplitz,
    x: ComplexVec,
}

impl VectorizedBlock {
    fn objective(&self) -> f64 {
        let reg = self.c * (self.v + self.u.trace());
        if !self.least_squares {
            return reg;
        }
        let fit: f64 = (0..self.data.len())
            .filter(|&p| self.observed[p])
            .map(|p| (self.data[p] - self.x[p]).norm_sqr())
            .sum();
        reg + fit
    }
}

impl Structure for VectorizedBlock {
    fn dim(&self) -> usize {
        self.n_x * self.n_y + 1
    }

    fn update(&mut self, b: MatRef<'_, Complex64>, rho: f64) {
        let shift = self.c / rho;
        self.v = b[(0, 0)].re - shift;
        self.u = TwoLevelToeplitz::project_with(self.n_x, self.n_y, shift, |p, q| b[(p + 1, q + 1)]);
        for p in 0..self.data.len() {
            let avg = (b[(p + 1, 0)] + b[(0, p + 1)].conj()) * 0.5;
            self.x[p] = if !self.observed[p] {
                avg
            } else if self.least_squares {
                (self.data[p] + avg * rho) / (1.0 + rho)
            } else {
                self.data[p]
            };
        }
    }

    fn write(&self, mut phi: MatMut<'_, Complex64>) {
        let n = self.data.len();
        phi[(0, 0)] = Complex64::new(self.v, 0.0);
        for p in 0..n {
            phi[(p + 1, 0)] = self.x[p];
            phi[(0, p + 1)] = self.x[p].conj();
        }
        self.u.write_into(phi.submatrix_mut(1, 1, n, n));
    }

    fn shift_diagonal(&mut self, delta: f64) {
        self.v += delta;
        self.u.shift_diagonal(delta);
    }
}

fn run(
    data: ComplexVec,
    observed: Vec<bool>,
    (n_x, n_y): (usize, usize),
    c: f64,
    least_squares: bool,
    settings: &SolverSettings,
) -> Result<VectorizedSolution> {
    settings.validate()?;
    if n_x * n_y > settings.vectorized_size_cap {
        log::warn!(
            "vectorized program with {} elements exceeds size cap {}; expect long solve times",
            n_x * n_y,
            settings.vectorized_size_cap
        );
    }
    if data.iter().all(|z| *z == Complex64::ZERO) {
        return Ok(VectorizedSolution {
            v: 0.0,
            u2d: TwoLevelToeplitz::zeros(n_x, n_y),
            x_hat: ComplexMat::zeros(n_x, n_y),
            objective: 0.0,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
        });
    }
    let mut block = VectorizedBlock {
        n_x,
        n_y,
        c,
        x: data.clone(),
        data,
        observed,
        least_squares,
        v: 0.0,
        u: TwoLevelToeplitz::zeros(n_x, n_y),
    };
    let outcome = admm::solve(&mut block, settings, false)?;
    admm::restore_feasibility(&mut block)?;
    Ok(VectorizedSolution {
        v: block.v,
        objective: block.objective(),
        x_hat: unvectorize(&block.x, n_x, n_y),
        u2d: block.u,
        iterations: outcome.iterations,
        primal_residual: outcome.primal_residual,
        dual_residual: outcome.dual_residual,
        converged: outcome.converged,
    })
}

/// Minimizes `(v + tr T_2D(u)) / 2` subject to `[[v, xᴴ], [x, T_2D(u)]] ⪰ 0`
/// for `x = vec(X)` of an `n_x × n_y` snapshot.
pub fn solve_vectorized(x: &ComplexVec, n_x: usize, n_y: usize, settings: &SolverSettings) -> Result<VectorizedSolution> {
    if x.len() != n_x * n_y {
        return Err(Error::ShapeMismatch {
            expected: (n_x * n_y, 1),
            found: (x.len(), 1),
        });
    }
    run(x.clone(), vec![true; x.len()], (n_x, n_y), 0.5, false, settings)
}

/// Exact-fit program with only the entries selected by `obs` pinned to `y`.
pub fn solve_vectorized_observed(y: &ComplexMat, obs: &ObservationModel, settings: &SolverSettings) -> Result<VectorizedSolution> {
    let (data, observed) = masked_data(y, obs)?;
    run(data, observed, y.shape(), 0.5, false, settings)
}

fn masked_data(y: &ComplexMat, obs: &ObservationModel) -> Result<(ComplexVec, Vec<bool>)> {
    obs.check_shape(y.shape())?;
    let (n_x, n_y) = y.shape();
    let observed: Vec<bool> = (0..n_x * n_y).map(|p| obs.is_observed(p % n_x, p / n_x)).collect();
    let mut data = vectorize(y);
    for (z, &o) in data.iter_mut().zip(&observed) {
        if !o {
            *z = Complex64::ZERO;
        }
    }
    Ok((data, observed))
}

/// Vectorized counterpart of the regularized decoupled program:
/// `λ/(2 sqrt(n_x n_y)) (v + tr T_2D(u)) + ‖Y − L(X)‖²_F`. The trace weight
/// makes the penalty `λ‖X‖_A`, the same as the decoupled form.
pub fn solve_vectorized_regularized(
    y: &ComplexMat,
    obs: &ObservationModel,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<VectorizedSolution> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    let (n_x, n_y) = y.shape();
    let (data, observed) = masked_data(y, obs)?;
    let c = lambda / (2.0 * ((n_x * n_y) as f64).sqrt());
    run(data, observed, (n_x, n_y), c, true, settings)
}
