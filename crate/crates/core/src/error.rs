//! Error type shared by all engines.

use thiserror::Error;

/// Errors surfaced by parsing, configuration validation, and the engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The engines implement the one-dimensional calculus only.
    #[error("unsupported dimension {0}: engines accept dimension 1 only")]
    UnsupportedDimension(usize),

    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Expression syntax error, with a byte offset into the source.
    #[error("syntax error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// A functional was evaluated with the wrong number of coordinates.
    #[error("arity mismatch: functional takes {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    /// A run configuration is self-inconsistent or over budget (CFL violation,
    /// leaf budget exceeded, missing product-space driver, ...).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A request is outside what the engine implements by design.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
