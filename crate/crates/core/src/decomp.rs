//! Frequency recovery from PSD Toeplitz matrices.
//!
//! One-level: Vandermonde decomposition `T = A diag(p) Aᴴ` through the shift
//! invariance of the dominant eigenspace (matrix pencil on the subspace),
//! followed by nonnegative least squares for the powers. Two-level: a 2D
//! MUSIC pseudo-spectrum with grid search and local peak polishing.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{steering_matrix, wrap_frequency};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMat};
use crate::toeplitz::TwoLevelToeplitz;

/// Relative eigenvalue threshold used by [`estimate_order`] by default.
pub const DEFAULT_ORDER_THRESHOLD: f64 = 1e-4;
/// Floor applied to recovered powers.
pub const POWER_FLOOR: f64 = 1e-12;
/// Relative threshold below which an eigenvalue is treated as numerically zero.
const RANK_THRESHOLD: f64 = 1e-10;
/// Pencil eigenvalues farther than this from the unit circle raise a flag.
const UNIT_CIRCLE_SLACK: f64 = 0.1;
/// Eigengap ratio `λ_{K+1}/λ_K` above which the split is flagged as ambiguous.
const EIGENGAP_RATIO: f64 = 0.9;

/// `T ≈ Σ_k p_k a(f_k) a(f_k)ᴴ` with frequencies sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VandermondeFactorization {
    pub freqs: Vec<f64>,
    pub powers: Vec<f64>,
    pub order: usize,
    /// Some pencil eigenvalue left the unit circle by more than 0.1.
    pub off_unit_circle: bool,
    /// The signal/noise eigengap is too small for a unique split.
    pub non_unique: bool,
}

impl VandermondeFactorization {
    /// `Σ_k p_k a(f_k) a(f_k)ᴴ` for an `n`-element array.
    pub fn reconstruct(&self, n: usize) -> ComplexMat {
        let a = steering_matrix(n, &self.freqs);
        let d = ComplexMat::from_diagonal(&DVector::from_iterator(
            self.order,
            self.powers.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        &a * d * a.adjoint()
    }
}

/// Number of eigenvalues above `rel_threshold` times the largest.
pub fn estimate_order(t: &ComplexMat, rel_threshold: f64) -> Result<usize> {
    let evd = linalg::hermitian_eigen(t)?;
    let top = evd.max_value();
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(evd.values.iter().filter(|&&v| v > rel_threshold * top).count())
}

/// Vandermonde decomposition of a PSD Hermitian Toeplitz matrix.
pub fn vandermonde_decompose(t: &ComplexMat, order: usize) -> Result<VandermondeFactorization> {
    let n = t.nrows();
    if !t.is_square() {
        return Err(Error::ShapeMismatch { expected: (n, n), found: t.shape() });
    }
    if order == 0 {
        return Ok(VandermondeFactorization {
            freqs: vec![],
            powers: vec![],
            order: 0,
            off_unit_circle: false,
            non_unique: false,
        });
    }
    if order + 1 > n {
        return Err(Error::Capacity { order, capacity: n.saturating_sub(1) });
    }
    let evd = linalg::hermitian_eigen(t)?;
    let top = evd.max_value();
    let detected = if top > 0.0 {
        evd.values.iter().filter(|&&v| v > RANK_THRESHOLD * top).count()
    } else {
        0
    };
    if order > detected {
        return Err(Error::RankDeficient { requested: order, detected });
    }
    let kth = evd.values[n - order];
    let next = evd.values[n - order - 1].max(0.0);
    let non_unique = next > EIGENGAP_RATIO * kth;

    let es = evd.dominant_subspace(order);
    let upper = es.rows(0, n - 1).into_owned();
    let lower = es.rows(1, n - 1).into_owned();
    let (pinv_upper, _) = linalg::pinv(&upper, 1e-12);
    let rotation = pinv_upper * lower;
    let roots = linalg::eigenvalues(&rotation)?;

    let off_unit_circle = roots.iter().any(|z| (z.norm() - 1.0).abs() > UNIT_CIRCLE_SLACK);
    let mut freqs: Vec<f64> = roots
        .iter()
        .map(|z| wrap_frequency(z.arg() / (2.0 * PI)))
        .collect();
    freqs.sort_by(|a, b| a.total_cmp(b));
    let powers = nnls_powers(t, &freqs);
    Ok(VandermondeFactorization { freqs, powers, order, off_unit_circle, non_unique })
}

/// Nonnegative least-squares powers of `T` against `a(f_k) a(f_k)ᴴ`, floored.
pub fn nnls_powers(t: &ComplexMat, freqs: &[f64]) -> Vec<f64> {
    let n = t.nrows();
    let a = steering_matrix(n, freqs);
    let k = freqs.len();
    // ⟨a_k a_kᴴ, a_l a_lᴴ⟩ = |a_kᴴ a_l|²,  ⟨a_k a_kᴴ, T⟩ = Re a_kᴴ T a_k
    let cross = a.adjoint() * &a;
    let gram = DMatrix::from_fn(k, k, |i, j| cross[(i, j)].norm_sqr());
    let ta = t * &a;
    let rhs = DVector::from_fn(k, |i, _| a.column(i).dotc(&ta.column(i)).re);
    nnls_quadratic(&gram, &rhs)
        .into_iter()
        .map(|p| p.max(POWER_FLOOR))
        .collect()
}

/// Active-set solve of `min ½ pᵀGp − bᵀp, p ≥ 0` for positive definite `G`.
fn nnls_quadratic(g: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let k = b.len();
    let mut p = vec![0.0; k];
    let mut passive = vec![false; k];
    let tol = 1e-14 * b.amax().max(1.0);
    for _ in 0..(3 * k + 10) {
        let grad: Vec<f64> = (0..k)
            .map(|i| b[i] - (0..k).map(|j| g[(i, j)] * p[j]).sum::<f64>())
            .collect();
        let candidate = (0..k)
            .filter(|&i| !passive[i] && grad[i] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(enter) = candidate else { break };
        passive[enter] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| g[(idx[r], idx[c])]);
            let rhs = DVector::from_fn(idx.len(), |r, _| b[idx[r]]);
            let Some(z) = sub.lu().solve(&rhs) else { break };
            if z.iter().all(|&v| v > 0.0) {
                p.iter_mut().for_each(|v| *v = 0.0);
                for (r, &i) in idx.iter().enumerate() {
                    p[i] = z[r];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (r, &i) in idx.iter().enumerate() {
                if z[r] <= 0.0 {
                    alpha = alpha.min(p[i] / (p[i] - z[r]));
                }
            }
            for (r, &i) in idx.iter().enumerate() {
                p[i] += alpha * (z[r] - p[i]);
                if p[i] <= tol {
                    p[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    p
}

/// Signal subspace of a two-level Toeplitz matrix for 2D MUSIC.
#[derive(Debug, Clone)]
pub struct Music2d {
    n_x: usize,
    n_y: usize,
    /// `conj` of the signal eigenvectors reshaped to `n_x × n_y`.
    kernels: Vec<ComplexMat>,
    pub eigengap_degenerate: bool,
}

impl Music2d {
    pub fn new(t2d: &TwoLevelToeplitz, order: usize) -> Result<Self> {
        let (n_x, n_y) = t2d.dims();
        let n = n_x * n_y;
        if order == 0 || order >= n {
            return Err(Error::InvalidInput(format!("MUSIC order {order} must lie in 1..{n}")));
        }
        let evd = linalg::hermitian_eigen(&t2d.materialize())?;
        let kth = evd.values[n - order];
        let next = evd.values[n - order - 1].max(0.0);
        let eigengap_degenerate = !(kth > 0.0) || next > EIGENGAP_RATIO * kth;
        let es = evd.dominant_subspace(order);
        let kernels = (0..order)
            .map(|k| ComplexMat::from_fn(n_x, n_y, |i, j| es[(i + n_x * j, k)].conj()))
            .collect();
        Ok(Self { n_x, n_y, kernels, eigengap_degenerate })
    }

    /// `‖E_sᴴ a(f_x, f_y)‖²`.
    fn signal_energy(&self, f_x: f64, f_y: f64) -> f64 {
        let ax: Vec<Complex64> = (0..self.n_x)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f_x * i as f64))
            .collect();
        let ay: Vec<Complex64> = (0..self.n_y)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * f_y * j as f64))
            .collect();
        self.kernels
            .iter()
            .map(|g| {
                let mut acc = Complex64::ZERO;
                for j in 0..self.n_y {
                    let mut col = Complex64::ZERO;
                    for i in 0..self.n_x {
                        col += g[(i, j)] * ax[i];
                    }
                    acc += col * ay[j];
                }
                acc.norm_sqr()
            })
            .sum()
    }

    /// `1 / ‖E_nᴴ a‖²`, computed through the signal subspace.
    pub fn pseudo_spectrum(&self, f_x: f64, f_y: f64) -> f64 {
        let noise = (self.n_x * self.n_y) as f64 - self.signal_energy(f_x, f_y);
        1.0 / noise.max(f64::MIN_POSITIVE)
    }

    /// Pseudo-spectrum on the uniform grid `(p / grid_x, q / grid_y)`.
    pub fn spectrum(&self, grid_x: usize, grid_y: usize) -> DMatrix<f64> {
        let (n_x, n_y) = (self.n_x, self.n_y);
        let tw_x = DMatrix::from_fn(grid_x, n_x, |p, i| {
            Complex64::from_polar(1.0, 2.0 * PI * ((p * i) % grid_x) as f64 / grid_x as f64)
        });
        let tw_y = DMatrix::from_fn(n_y, grid_y, |j, q| {
            Complex64::from_polar(1.0, -2.0 * PI * ((q * j) % grid_y) as f64 / grid_y as f64)
        });
        let mut energy = DMatrix::<f64>::zeros(grid_x, grid_y);
        for g in &self.kernels {
            let vals = &tw_x * g * &tw_y;
            energy.zip_apply(&vals, |e, v| *e += v.norm_sqr());
        }
        let total = (n_x * n_y) as f64;
        energy.map(|e| 1.0 / (total - e).max(f64::MIN_POSITIVE))
    }

    /// The `order` largest local maxima of the grid spectrum, each polished
    /// by a shrinking compass search on the continuous pseudo-spectrum.
    pub fn peaks(&self, grid_x: usize, grid_y: usize) -> Vec<(f64, f64)> {
        let spec = self.spectrum(grid_x, grid_y);
        let mut maxima = grid_local_maxima(&spec);
        maxima.sort_by(|a, b| spec[(b.0, b.1)].total_cmp(&spec[(a.0, a.1)]));
        maxima
            .into_iter()
            .take(self.kernels.len())
            .map(|(p, q)| {
                self.polish(p as f64 / grid_x as f64, q as f64 / grid_y as f64, 1.0 / grid_x as f64, 1.0 / grid_y as f64)
            })
            .collect()
    }

    fn polish(&self, mut fx: f64, mut fy: f64, mut sx: f64, mut sy: f64) -> (f64, f64) {
        let mut best = self.signal_energy(fx, fy);
        while sx > 1e-12 || sy > 1e-12 {
            let mut moved = false;
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                let (cx, cy) = (fx + dx * sx, fy + dy * sy);
                let e = self.signal_energy(cx, cy);
                if e > best {
                    best = e;
                    fx = cx;
                    fy = cy;
                    moved = true;
                }
            }
            if !moved {
                sx *= 0.5;
                sy *= 0.5;
            }
        }
        (wrap_frequency(fx), wrap_frequency(fy))
    }
}

fn grid_local_maxima(spec: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let (gx, gy) = spec.shape();
    let mut out = Vec::new();
    for q in 0..gy {
        for p in 0..gx {
            let v = spec[(p, q)];
            let mut is_max = true;
            'nb: for dq in [gy - 1, 0, 1] {
                for dp in [gx - 1, 0, 1] {
                    if dp == 0 && dq == 0 {
                        continue;
                    }
                    let (pp, qq) = ((p + dp) % gx, (q + dq) % gy);
                    let w = spec[(pp, qq)];
                    // plateaus keep only their first cell in scan order
                    if w > v || (w == v && (qq, pp) < (q, p)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push((p, q));
            }
        }
    }
    out
}

/// 2D MUSIC pseudo-spectrum of `t2d` on a `grid_x × grid_y` grid.
pub fn music2d_spectrum(t2d: &TwoLevelToeplitz, order: usize, grid_x: usize, grid_y: usize) -> Result<DMatrix<f64>> {
    Ok(Music2d::new(t2d, order)?.spectrum(grid_x, grid_y))
}
