use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configured resource cap would be exceeded.
    #[error("resource cap exceeded: expected {expected:.0} points, cap is {cap:.0}")]
    Resource { expected: f64, cap: f64 },

    /// Malformed input file or config.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Too few observations above the cut for a tail estimate.
    #[error("insufficient tail: {found} samples above the cut, need at least {needed}")]
    InsufficientTail { found: usize, needed: usize },

    /// The two requested vertices are not in the same component.
    #[error("vertices {0} and {1} are not connected")]
    Disconnected(usize, usize),

    /// The operation does not apply to the given parameters.
    #[error("refused: {0}")]
    Refused(String),

    /// A constructed object failed its own structural check.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
