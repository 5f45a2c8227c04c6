use thiserror::Error;

/// Errors raised by band computations, calibration and data handling.
#[derive(Debug, Error)]
pub enum BandError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The multiscale test rejects every convex candidate.
    #[error("empty confidence set: a convex median function is not plausible for these data")]
    Infeasible,

    #[error("storage error: {0}")]
    Storage(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, BandError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BandError::InvalidInput(msg.into()))
}
