use thiserror::Error;

/// Unified error type for the crate.
///
/// Variants distinguish between malformed inputs (bad geometry, bad field
/// data), violated mathematical preconditions (exponent bounds, hypothesis
/// windows), and plumbing failures (I/O, JSON).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid cube query: {0}")]
    InvalidQuery(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid exponent system: {0}")]
    InvalidExponent(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("norm computation failed: {0}")]
    Norm(String),

    #[error("preconditions not met: {0}")]
    Preconditions(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
