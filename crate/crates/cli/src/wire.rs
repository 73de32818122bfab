//! On-disk shapes of snapshots and estimation results. Complex arrays are
//! flat lists of interleaved real and imaginary parts; matrices are stored
//! row-major.

use danm_core::certificate::CertificateReport;
use danm_core::pipeline::{Diagnostics, Fit, PipelineEstimate, SolutionBlocks};
use danm_core::{ComplexMat, Method, Scenario, SourceSet};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn interleave<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> Vec<f64> {
    values.into_iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn deinterleave(raw: &[f64], what: &str) -> Result<Vec<Complex64>, CliError> {
    if raw.len() % 2 != 0 {
        return Err(CliError::Input(format!("{what}: odd number of interleaved values ({})", raw.len())));
    }
    Ok(raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixWire {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `[re, im, re, im, ...]`.
    pub data: Vec<f64>,
}

impl MatrixWire {
    pub fn from_mat(m: &ComplexMat) -> Self {
        let entries: Vec<Complex64> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        Self { rows: m.nrows(), cols: m.ncols(), data: interleave(&entries) }
    }

    pub fn to_mat(&self, what: &str) -> Result<ComplexMat, CliError> {
        let vals = deinterleave(&self.data, what)?;
        if vals.len() != self.rows * self.cols {
            return Err(CliError::Input(format!(
                "{what}: {} complex entries for a {}x{} matrix",
                vals.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(ComplexMat::from_row_iterator(self.rows, self.cols, vals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotPayload {
    pub scenario: Scenario,
    pub y: MatrixWire,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairWire {
    pub f_x: f64,
    pub f_y: f64,
    pub amp_re: f64,
    pub amp_im: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum BlocksWire {
    /// First rows of `T(u_x)` and `T(u_y)`.
    Decoupled { u_x: Vec<f64>, u_y: Vec<f64> },
    /// Two-level lags, `k_x` fastest over `-(n_x-1)..=n_x-1`, then `k_y`.
    Vectorized { v: f64, u2d_lags: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultPayload {
    pub method: Method,
    pub fit: Fit,
    pub order: usize,
    pub converged: bool,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub pairs: Vec<PairWire>,
    pub x_hat: MatrixWire,
    pub blocks: BlocksWire,
    pub dual_certificate: Option<MatrixWire>,
    pub diagnostics: Diagnostics,
    pub certificate: Option<CertificateReport>,
}

impl ResultPayload {
    pub fn new(est: &PipelineEstimate, fit: Fit, certificate: Option<CertificateReport>) -> Self {
        let pairs = est
            .estimate
            .pairs
            .iter()
            .zip(&est.estimate.match_scores)
            .map(|(s, &score)| PairWire { f_x: s.f_x, f_y: s.f_y, amp_re: s.amp.re, amp_im: s.amp.im, score })
            .collect();
        let blocks = match &est.blocks {
            SolutionBlocks::Decoupled { u_x, u_y } => {
                BlocksWire::Decoupled { u_x: interleave(u_x.first_row()), u_y: interleave(u_y.first_row()) }
            }
            SolutionBlocks::Vectorized { v, u2d } => BlocksWire::Vectorized { v: *v, u2d_lags: interleave(u2d.lags()) },
        };
        Self {
            method: est.method,
            fit,
            order: est.order,
            converged: est.converged,
            objective: est.objective,
            iterations: est.iterations,
            primal_residual: est.primal_residual,
            dual_residual: est.dual_residual,
            pairs,
            x_hat: MatrixWire::from_mat(&est.x_hat),
            blocks,
            dual_certificate: est.dual_certificate.as_ref().map(MatrixWire::from_mat),
            diagnostics: est.diagnostics.clone(),
            certificate,
        }
    }

    pub fn support(&self) -> SourceSet {
        self.pairs
            .iter()
            .map(|p| danm_core::Source::new(p.f_x, p.f_y, Complex64::new(p.amp_re, p.amp_im)))
            .collect()
    }
}
