//! Dense complex linear algebra shared by the solvers and decomposition code.
//!
//! The public matrix type is nalgebra's `DMatrix<Complex64>`. Hermitian
//! eigendecompositions and the large products inside the PSD projection go
//! through faer, which is markedly faster at the sizes the vectorized
//! baseline produces.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type ComplexMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type ComplexVec = DVector<Complex64>;

pub(crate) fn to_faer(m: &ComplexMat) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) fn from_faer(m: MatRef<'_, Complex64>) -> ComplexMat {
    ComplexMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigen-pairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<Complex64>,
}

impl HermitianEigen {
    /// Columns of the eigenvectors belonging to the `k` largest eigenvalues,
    /// largest first.
    pub fn dominant_subspace(&self, k: usize) -> ComplexMat {
        let n = self.values.len();
        ComplexMat::from_fn(n, k, |i, j| self.vectors[(i, n - 1 - j)])
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the Hermitian part of a faer matrix.
pub(crate) fn hermitian_eigen_faer(h: MatRef<'_, Complex64>) -> Result<HermitianEigen> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let values: Vec<f64> = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    Ok(HermitianEigen {
        values,
        vectors: evd.U().to_owned(),
    })
}

/// Eigendecomposition of the Hermitian part of `h`.
pub fn hermitian_eigen(h: &ComplexMat) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch {
            expected: (h.nrows(), h.nrows()),
            found: h.shape(),
        });
    }
    hermitian_eigen_faer(to_faer(&hermitian_part(h)).as_ref())
}

/// `(H + Hᴴ) / 2`.
pub fn hermitian_part(h: &ComplexMat) -> ComplexMat {
    (h + h.adjoint()).scale(0.5)
}

/// Moore-Penrose pseudo-inverse through a thin SVD. Singular values below
/// `rcond` times the largest are treated as zero. Also returns the rank.
pub fn pinv(a: &ComplexMat, rcond: f64) -> (ComplexMat, usize) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (ComplexMat::zeros(n, m), 0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let smax = svd.singular_values.max();
    let cutoff = rcond * smax;
    let mut rank = 0;
    let mut out = ComplexMat::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk).unscale(s);
        }
    }
    (out, rank)
}

/// Numerical rank with singular values compared against `rtol · σ_max`.
pub fn numerical_rank(a: &ComplexMat, rtol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Eigenvalues of a general square complex matrix.
pub fn eigenvalues(a: &ComplexMat) -> Result<Vec<Complex64>> {
    to_faer(a)
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Frobenius norm of a faer matrix.
pub(crate) fn fro(m: MatRef<'_, Complex64>) -> f64 {
    m.norm_l2()
}
