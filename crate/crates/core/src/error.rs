use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamformError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    /// Raised when a factorization of a matrix that should be positive
    /// definite fails. Carries the eigenvalue condition estimate.
    #[error("matrix is numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    /// The quadratic constraint set `wᴴQw ≥ 1` is empty.
    #[error("constraint set is infeasible (largest pencil eigenvalue {lambda_max:.3e})")]
    Infeasible { lambda_max: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BeamformError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(BeamformError::Domain(msg.into()))
}
