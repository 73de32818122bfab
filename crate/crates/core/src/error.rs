use thiserror::Error;

/// Errors raised across the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("separation bound undefined for n = {n}: floor((n-1)/4) is zero")]
    DegenerateSeparationBound { n: usize },

    #[error("snr_db must be finite, got {0}")]
    NonFiniteSnr(f64),

    #[error("requested order {requested} exceeds detected rank {detected}")]
    RankDeficient { requested: usize, detected: usize },

    #[error("{order} sources exceed array capacity {capacity}")]
    Capacity { order: usize, capacity: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("dual certificate unavailable: {0}")]
    CertificateUnavailable(&'static str),

    #[error("cannot place {k} sources with wrap separation {min_sep} on the unit circle")]
    InfeasibleSeparation { k: usize, min_sep: f64 },

    #[error("problem size {size} exceeds vectorized size cap {cap}")]
    SizeCap { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
