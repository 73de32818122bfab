use std::fmt;

/// Failure classes, each with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs (exit 2).
    Input(String),
    /// The solver hit its iteration limit (exit 3).
    NonConvergence(String),
    /// A required file or certificate does not exist (exit 4).
    MissingArtifact(String),
    /// Anything else (exit 1).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::MissingArtifact(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
            CliError::MissingArtifact(m) => write!(f, "missing artifact: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<danm_core::Error> for CliError {
    fn from(e: danm_core::Error) -> Self {
        match e {
            danm_core::Error::CertificateUnavailable(_) => CliError::MissingArtifact(e.to_string()),
            danm_core::Error::Eigen(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<danm_bench::BenchError> for CliError {
    fn from(e: danm_bench::BenchError) -> Self {
        match e {
            danm_bench::BenchError::Core(c) => c.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}
