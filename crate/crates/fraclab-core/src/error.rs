use thiserror::Error;

pub type Result<T> = std::result::Result<T, FracError>;

#[derive(Debug, Error)]
pub enum FracError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Last iterate on the full grid, for diagnostics.
        last_iterate: Vec<f64>,
    },

    #[error("eigensolver failure: {0}")]
    EigenFailure(String),

    #[error("hypothesis violated: {0}")]
    PreconditionFailed(String),

    #[error("boundary fit failed: {0}")]
    FitFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
