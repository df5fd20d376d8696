use thiserror::Error;

/// Errors raised by the operators and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: need m >= 2")]
    InvalidDimension(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("operator is singular (all spin-structure twists are periodic)")]
    Singular,

    #[error("nonlinearity does not satisfy {0}")]
    Classification(String),

    #[error("{what} did not converge: {reason}")]
    NonConvergence { what: &'static str, reason: String, trace: Vec<crate::critical::TraceEntry> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
