//! Crate-wide error type.

use crate::linsolve::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A mathematical precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration (grid sizes, flags, config file) is not usable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Vector/matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The iterative solver ran out of iterations; carries the final report.
    #[error(
        "solver did not converge: {} iterations, relative residual {:.3e} (tolerance {:.3e})",
        report.iterations, report.final_relative_residual, report.tolerance
    )]
    ConvergenceFailure { report: SolveReport },

    /// Negative curvature detected during conjugate gradients; the assembled
    /// operator is not positive definite, which indicates an assembly bug.
    #[error("operator not positive definite: {0}")]
    IndefiniteOperator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
