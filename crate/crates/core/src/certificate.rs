//! Dual polynomial evaluation and optimality certification.
//!
//! For a dual matrix `Q` (N × M) the dual polynomial is
//! `Q(f_x, f_y) = a_N(f_x)ᴴ Q a_M(f_y)`. A certificate is valid when it
//! interpolates the amplitude signs on the support and stays strictly below
//! one in modulus everywhere else.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::array::{steering_vector, wrap_distance, SourceSet};
use crate::error::{Error, Result};
use crate::linalg::ComplexMat;

/// Smallest grid accepted by [`certify`] per dimension.
pub const MIN_CERT_GRID: usize = 64;

/// `a_N(f_x)ᴴ Q a_M(f_y)`.
pub fn dual_poly_eval(q: &ComplexMat, f_x: f64, f_y: f64) -> Complex64 {
    let ax = steering_vector(q.nrows(), f_x);
    let ay = steering_vector(q.ncols(), f_y);
    ax.dotc(&(q * ay))
}

/// Dual polynomial on the grid `(p / grid_x, q / grid_y)` via 2D FFT.
///
/// `V[p, q] = Σ_{i,j} Q[i, j] e^{-j2π p i / grid_x} e^{+j2π q j / grid_y}`:
/// a forward transform down the columns and an unnormalized inverse
/// transform along the rows. Grids smaller than the array fold the
/// coefficients modulo the grid size, which is exact on grid points.
pub fn dual_poly_grid(q: &ComplexMat, grid_x: usize, grid_y: usize) -> Result<DMatrix<Complex64>> {
    if grid_x == 0 || grid_y == 0 {
        return Err(Error::InvalidInput("grid must be non-empty".into()));
    }
    let mut buf = DMatrix::<Complex64>::zeros(grid_x, grid_y);
    for j in 0..q.ncols() {
        for i in 0..q.nrows() {
            buf[(i % grid_x, j % grid_y)] += q[(i, j)];
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(grid_x);
    for mut col in buf.column_iter_mut() {
        fwd.process(col.as_mut_slice());
    }
    let inv = planner.plan_fft_inverse(grid_y);
    let mut row = vec![Complex64::ZERO; grid_y];
    for p in 0..grid_x {
        for (qq, slot) in row.iter_mut().enumerate() {
            *slot = buf[(p, qq)];
        }
        inv.process(&mut row);
        for (qq, v) in row.iter().enumerate() {
            buf[(p, qq)] = *v;
        }
    }
    Ok(buf)
}

/// Direct O(grid · N · M) evaluation, used to cross-check the FFT path.
pub fn dual_poly_grid_naive(q: &ComplexMat, grid_x: usize, grid_y: usize) -> DMatrix<Complex64> {
    let (n, m) = q.shape();
    let ex = DMatrix::from_fn(grid_x, n, |p, i| {
        Complex64::from_polar(1.0, -2.0 * PI * ((p * i) % grid_x) as f64 / grid_x as f64)
    });
    let ey = DMatrix::from_fn(m, grid_y, |j, qq| {
        Complex64::from_polar(1.0, 2.0 * PI * ((qq * j) % grid_y) as f64 / grid_y as f64)
    });
    ex * q * ey
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `|Q(f_k) - sign(s_k)|` for every support point, in input order.
    pub interpolation_errors: Vec<f64>,
    /// Largest `|Q|` over grid points outside the exclusion zones.
    pub max_offgrid_modulus: f64,
    /// Location of that maximum.
    pub max_offgrid_location: (f64, f64),
    pub grid_density: (usize, usize),
    /// Radius of the exclusion disc around each support point.
    pub exclusion_radius: f64,
    pub passed: bool,
}

/// Checks interpolation on `support` and boundedness on a dense grid.
///
/// Grid points within `1 / (4 max(N, M))` (Euclidean, wrapped per axis) of a
/// support point are excluded from the off-support maximum. The check passes
/// when every interpolation error is at most `tol` and the off-support
/// maximum stays below `1 + tol`.
pub fn certify(q: &ComplexMat, support: &SourceSet, grid: (usize, usize), tol: f64) -> Result<CertificateReport> {
    let (grid_x, grid_y) = grid;
    if grid_x < MIN_CERT_GRID || grid_y < MIN_CERT_GRID {
        return Err(Error::InvalidInput(format!(
            "certificate grid {grid_x}x{grid_y} is below the minimum {MIN_CERT_GRID}x{MIN_CERT_GRID}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let (n, m) = q.shape();
    let interpolation_errors: Vec<f64> = support
        .iter()
        .map(|s| {
            let sign = if s.amp.norm() > 0.0 { s.amp / s.amp.norm() } else { Complex64::ZERO };
            (dual_poly_eval(q, s.f_x, s.f_y) - sign).norm()
        })
        .collect();
    let radius = 1.0 / (4.0 * n.max(m) as f64);
    let vals = dual_poly_grid(q, grid_x, grid_y)?;
    let mut best = (0.0f64, (0.0, 0.0));
    for qq in 0..grid_y {
        let fy = qq as f64 / grid_y as f64;
        for p in 0..grid_x {
            let fx = p as f64 / grid_x as f64;
            let excluded = support.iter().any(|s| {
                wrap_distance(fx, s.f_x).hypot(wrap_distance(fy, s.f_y)) < radius
            });
            if excluded {
                continue;
            }
            let v = vals[(p, qq)].norm();
            if v > best.0 {
                best = (v, (fx, fy));
            }
        }
    }
    let passed = interpolation_errors.iter().all(|&e| e <= tol) && best.0 < 1.0 + tol;
    Ok(CertificateReport {
        interpolation_errors,
        max_offgrid_modulus: best.0,
        max_offgrid_location: best.1,
        grid_density: grid,
        exclusion_radius: radius,
        passed,
    })
}

/// Lowest-energy `Q` in the span of the support atoms that interpolates
/// `sign(s_k)` at every support point.
pub fn min_energy_certificate(n_x: usize, n_y: usize, support: &SourceSet) -> Result<ComplexMat> {
    let k = support.len();
    let ax: Vec<_> = support.iter().map(|s| steering_vector(n_x, s.f_x)).collect();
    let ay: Vec<_> = support.iter().map(|s| steering_vector(n_y, s.f_y)).collect();
    // Q = Σ_l β_l a_x,l a_y,lᴴ  ⇒  Q(θ_k) = Σ_l β_l (a_x,kᴴ a_x,l)(a_y,lᴴ a_y,k)
    let g = DMatrix::from_fn(k, k, |r, l| ax[r].dotc(&ax[l]) * ay[l].dotc(&ay[r]));
    let signs = nalgebra::DVector::from_iterator(
        k,
        support.iter().map(|s| if s.amp.norm() > 0.0 { s.amp / s.amp.norm() } else { Complex64::ZERO }),
    );
    let beta = g
        .lu()
        .solve(&signs)
        .ok_or(Error::RankDeficient { requested: k, detected: 0 })?;
    let mut q = ComplexMat::zeros(n_x, n_y);
    for l in 0..k {
        q += (&ax[l] * ay[l].adjoint()) * beta[l];
    }
    Ok(q)
}

/// Bracket `[lower, upper]` on the minimum ℓ1 coefficient mass of `x` over
/// the atom grid `(p / grid, q / grid)`.
///
/// `upper` is the mass of `decomposition`, which must reproduce `x` and sit
/// on the grid. Each candidate dual `Q` gives `lower >= Re⟨Q, X⟩ / max |Q|`
/// over the grid, by weak duality; the best one is kept.
pub fn grid_l1_bracket(x: &ComplexMat, decomposition: &SourceSet, duals: &[ComplexMat], grid: usize) -> Result<(f64, f64)> {
    let (n_x, n_y) = x.shape();
    let g = grid as f64;
    for s in decomposition.iter() {
        let off = ((s.f_x * g).round() - s.f_x * g).abs().max(((s.f_y * g).round() - s.f_y * g).abs());
        if off > 1e-9 {
            return Err(Error::InvalidInput(format!("atom ({}, {}) is not on the {grid}-point grid", s.f_x, s.f_y)));
        }
    }
    let rebuilt = crate::array::synthesize(crate::array::ArrayGeometry::new(n_x, n_y)?, decomposition)?;
    if (&rebuilt - x).norm() > 1e-9 * x.norm().max(1.0) {
        return Err(Error::InvalidInput("decomposition does not reproduce the signal".into()));
    }
    let upper = decomposition.l1_mass();
    let mut lower = 0.0f64;
    for q in duals {
        if q.shape() != x.shape() {
            return Err(Error::ShapeMismatch { expected: x.shape(), found: q.shape() });
        }
        let peak = dual_poly_grid(q, grid, grid)?.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if peak > 0.0 {
            lower = lower.max(q.zip_fold(x, 0.0, |acc, a, b| acc + (a.conj() * b).re) / peak);
        }
    }
    Ok((lower, upper))
}
