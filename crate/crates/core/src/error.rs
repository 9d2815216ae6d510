use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Verdict failures are not errors; they are reported as data in
/// [`crate::report::Verdict`] and [`crate::report::Report`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("negative or non-finite value {value} at cell {index}")]
    InvalidValue { index: usize, value: f64 },
    #[error("invalid half-space: {0}")]
    InvalidHalfSpace(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite accumulation while evaluating {0}")]
    NonFinite(String),
    #[error("cell-operation budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("box too small: {0}")]
    GrowExtent(String),
    #[error("input is not radially nonincreasing (distance to its symmetrization {0:e})")]
    NotRadial(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
