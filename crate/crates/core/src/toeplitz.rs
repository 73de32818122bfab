//! Hermitian Toeplitz structures: one-level `T(u)` and the two-level
//! block-Toeplitz-of-Toeplitz matrix of the vectorized formulation.

use faer::{MatMut, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, ComplexVec};

/// Hermitian Toeplitz matrix stored by its first row.
///
/// `T[i][j] = u[j-i]` for `j ≥ i` and `conj(u[i-j])` below the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermToeplitz {
    first_row: Vec<Complex64>,
}

impl HermToeplitz {
    pub fn new(first_row: Vec<Complex64>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::InvalidInput("Toeplitz first row is empty".into()));
        }
        let mut first_row = first_row;
        first_row[0].im = 0.0;
        Ok(Self { first_row })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            first_row: vec![Complex64::ZERO; n.max(1)],
        }
    }

    /// First row of `Σ_k p_k a(f_k) a(f_k)ᴴ`.
    pub fn from_spectrum(n: usize, freqs: &[f64], powers: &[f64]) -> Self {
        let mut u = vec![Complex64::ZERO; n.max(1)];
        for (&f, &p) in freqs.iter().zip(powers) {
            for (k, uk) in u.iter_mut().enumerate() {
                // row 0, column k of a aᴴ is conj(a_0) a_k = e^{-j2πfk}
                *uk += Complex64::from_polar(p, -2.0 * std::f64::consts::PI * f * k as f64);
            }
        }
        Self { first_row: u }
    }

    pub fn first_row(&self) -> &[Complex64] {
        &self.first_row
    }

    pub fn len(&self) -> usize {
        self.first_row.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn trace(&self) -> f64 {
        self.len() as f64 * self.first_row[0].re
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if j >= i {
            self.first_row[j - i]
        } else {
            self.first_row[i - j].conj()
        }
    }

    pub fn materialize(&self) -> ComplexMat {
        let n = self.len();
        ComplexMat::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Least-squares projection onto Hermitian Toeplitz matrices: each lag is
    /// the mean of its diagonal in the Hermitian part of `h`.
    pub fn project(h: &ComplexMat) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: (h.nrows(), h.nrows()),
                found: h.shape(),
            });
        }
        let n = h.nrows();
        let first_row = (0..n)
            .map(|k| diagonal_mean(n, k, |i, j| h[(i, j)]))
            .collect();
        Ok(Self { first_row })
    }

    pub(crate) fn project_faer(b: MatRef<'_, Complex64>, trace_shift: f64) -> Self {
        let n = b.nrows();
        let mut first_row: Vec<Complex64> = (0..n)
            .map(|k| diagonal_mean(n, k, |i, j| b[(i, j)]))
            .collect();
        first_row[0].re -= trace_shift;
        Self { first_row }
    }

    pub(crate) fn write_into(&self, mut out: MatMut<'_, Complex64>) {
        let n = self.len();
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] = self.entry(i, j);
            }
        }
    }

    pub(crate) fn shift_diagonal(&mut self, delta: f64) {
        self.first_row[0].re += delta;
    }
}

fn diagonal_mean(n: usize, k: usize, at: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for i in 0..(n - k) {
        acc += at(i, i + k) + at(i + k, i).conj();
    }
    let mean = acc / (2.0 * (n - k) as f64);
    if k == 0 {
        Complex64::new(mean.re, 0.0)
    } else {
        mean
    }
}

/// `T(u)`.
pub fn toeplitz_materialize(u: &HermToeplitz) -> ComplexMat {
    u.materialize()
}

/// Frobenius-nearest Hermitian Toeplitz matrix to `h`, by first row.
pub fn toeplitz_adjoint_project(h: &ComplexMat) -> Result<HermToeplitz> {
    HermToeplitz::project(h)
}

/// Two-level Hermitian Toeplitz matrix acting on `vec(X)`, with
/// `X ∈ C^{n_x × n_y}` stacked column by column.
///
/// Row index `p = i + n_x·j`. The entry between `(i, j)` and `(i', j')`
/// depends only on `(k_x, k_y) = (i' - i, j' - j)`; lags with `k_y ≥ 0` are
/// stored and the rest follow from Hermitian symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelToeplitz {
    n_x: usize,
    n_y: usize,
    lags: Vec<Complex64>,
}

impl TwoLevelToeplitz {
    pub fn zeros(n_x: usize, n_y: usize) -> Self {
        Self {
            n_x,
            n_y,
            lags: vec![Complex64::ZERO; (2 * n_x - 1) * n_y],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    pub fn size(&self) -> usize {
        self.n_x * self.n_y
    }

    fn slot(&self, k_x: isize, k_y: usize) -> usize {
        (k_x + self.n_x as isize - 1) as usize + (2 * self.n_x - 1) * k_y
    }

    /// All stored lags, `k_x` fastest from `-(n_x - 1)` to `n_x - 1`, then
    /// `k_y` from 0 to `n_y - 1`.
    pub fn lags(&self) -> &[Complex64] {
        &self.lags
    }

    /// Stored lag, `k_y ≥ 0`.
    pub fn lag(&self, k_x: isize, k_y: usize) -> Complex64 {
        self.lags[self.slot(k_x, k_y)]
    }

    fn lag_signed(&self, k_x: isize, k_y: isize) -> Complex64 {
        if k_y > 0 || (k_y == 0 && k_x >= 0) {
            self.lag(k_x, k_y as usize)
        } else {
            self.lag(-k_x, (-k_y) as usize).conj()
        }
    }

    pub fn entry(&self, p: usize, q: usize) -> Complex64 {
        let (i, j) = ((p % self.n_x) as isize, (p / self.n_x) as isize);
        let (i2, j2) = ((q % self.n_x) as isize, (q / self.n_x) as isize);
        self.lag_signed(i2 - i, j2 - j)
    }

    pub fn trace(&self) -> f64 {
        self.size() as f64 * self.lag(0, 0).re
    }

    pub fn materialize(&self) -> ComplexMat {
        let n = self.size();
        ComplexMat::from_fn(n, n, |p, q| self.entry(p, q))
    }

    /// `Σ_k p_k a(f_k) a(f_k)ᴴ` with `a` the Kronecker steering vector.
    pub fn from_spectrum(n_x: usize, n_y: usize, atoms: &[(f64, f64, f64)]) -> Self {
        let mut t = Self::zeros(n_x, n_y);
        let two_pi = 2.0 * std::f64::consts::PI;
        for k_y in 0..n_y {
            for k_x in -(n_x as isize - 1)..(n_x as isize) {
                let v: Complex64 = atoms
                    .iter()
                    .map(|&(fx, fy, p)| {
                        Complex64::from_polar(p, -two_pi * (fx * k_x as f64 - fy * k_y as f64))
                    })
                    .sum();
                let s = t.slot(k_x, k_y);
                t.lags[s] = v;
            }
        }
        t
    }

    /// Least-squares projection of an `(n_x n_y)`-square matrix.
    pub fn project(h: &ComplexMat, n_x: usize, n_y: usize) -> Result<Self> {
        if h.shape() != (n_x * n_y, n_x * n_y) {
            return Err(Error::ShapeMismatch {
                expected: (n_x * n_y, n_x * n_y),
                found: h.shape(),
            });
        }
        Ok(Self::project_with(n_x, n_y, 0.0, |p, q| h[(p, q)]))
    }

    pub(crate) fn project_with(
        n_x: usize,
        n_y: usize,
        trace_shift: f64,
        at: impl Fn(usize, usize) -> Complex64,
    ) -> Self {
        let mut t = Self::zeros(n_x, n_y);
        let mut counts = vec![0usize; t.lags.len()];
        let n = n_x * n_y;
        for q in 0..n {
            let (i2, j2) = ((q % n_x) as isize, (q / n_x) as isize);
            for p in 0..n {
                let (i, j) = ((p % n_x) as isize, (p / n_x) as isize);
                let (kx, ky) = (i2 - i, j2 - j);
                let v = at(p, q);
                if ky > 0 || (ky == 0 && kx >= 0) {
                    let s = t.slot(kx, ky as usize);
                    t.lags[s] += v;
                    counts[s] += 1;
                }
                if ky < 0 || (ky == 0 && kx <= 0) {
                    let s = t.slot(-kx, (-ky) as usize);
                    t.lags[s] += v.conj();
                    counts[s] += 1;
                }
            }
        }
        for (l, &c) in t.lags.iter_mut().zip(&counts) {
            if c > 0 {
                *l /= c as f64;
            }
        }
        let s0 = t.slot(0, 0);
        t.lags[s0] = Complex64::new(t.lags[s0].re - trace_shift, 0.0);
        t
    }

    pub(crate) fn write_into(&self, mut out: MatMut<'_, Complex64>) {
        let n = self.size();
        for q in 0..n {
            for p in 0..n {
                out[(p, q)] = self.entry(p, q);
            }
        }
    }

    pub(crate) fn shift_diagonal(&mut self, delta: f64) {
        let s0 = self.slot(0, 0);
        self.lags[s0].re += delta;
    }
}

/// `a(f_x, f_y) = conj(a_{n_y}(f_y)) ⊗ a_{n_x}(f_x)`, i.e. `vec(a aᴴ)`.
pub fn kron_steering(n_x: usize, n_y: usize, f_x: f64, f_y: f64) -> ComplexVec {
    let two_pi = 2.0 * std::f64::consts::PI;
    ComplexVec::from_fn(n_x * n_y, |p, _| {
        let (i, j) = ((p % n_x) as f64, (p / n_x) as f64);
        Complex64::from_polar(1.0, two_pi * (f_x * i - f_y * j))
    })
}

/// Column-major vectorization.
pub fn vectorize(x: &ComplexMat) -> ComplexVec {
    ComplexVec::from_iterator(x.len(), x.iter().copied())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(x: &ComplexVec, n_x: usize, n_y: usize) -> ComplexMat {
    ComplexMat::from_column_slice(n_x, n_y, x.as_slice())
}
