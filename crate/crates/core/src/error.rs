use thiserror::Error;

use crate::lie::LieError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("analytic and numeric Jacobians disagree by {max_diff:e}")]
    ModelInconsistency { max_diff: f64 },
    #[error("innovation covariance is singular (condition number {condition:e}), update skipped")]
    SingularInnovation { condition: f64 },
    #[error("covariance is not invertible")]
    SingularCovariance,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("verification infeasible: {0}")]
    VerificationInfeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
