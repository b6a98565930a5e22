use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric (|a_ij - a_ji| = {gap:e} at ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("variable {0} has degree 0; strip isolated variables first")]
    IsolatedVariable(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerNotConverged { iterations: usize },

    #[error("net of {size} points exceeds the cap of {cap}")]
    NetTooLarge { size: u128, cap: u64 },

    #[error("instance too large for exhaustive search: {size} assignments exceed the cap of {cap}")]
    TooLargeForOracle { size: u128, cap: u64 },

    #[error("diagonal block {0} of the objective matrix is not zero")]
    NonZeroDiagonalBlock(usize),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
