use thiserror::Error;

/// Errors produced by the frame operators, solvers and deblurring loops.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("block at (row {row}, col {col}) with side {side} lies outside a {height}x{width} image")]
    BlockOutOfBounds {
        row: usize,
        col: usize,
        side: usize,
        height: usize,
        width: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("solver diverged after {iterations} iterations: {reason}")]
    SolverDivergence { iterations: usize, reason: String },

    #[error("non-finite iterate at outer iteration {iteration} of {algorithm}")]
    NonFiniteIterate {
        algorithm: &'static str,
        iteration: usize,
    },

    #[error("instance too large for dense evaluation: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("image i/o: {0}")]
    Image(#[from] image::ImageError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
