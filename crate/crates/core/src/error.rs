use thiserror::Error;

/// Errors raised by the engine. Mathematical failures (nonzero residuals,
/// broken identities) are reported through result types, not through this enum.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("exponential not \u{3bb}-adically convergent: {0}")]
    Convergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
