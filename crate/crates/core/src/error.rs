//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any casegraph operation.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (bad bandwidth, empty input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Operand shapes are incompatible.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    /// The input is degenerate for the requested computation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Gold data is inconsistent with the schema or tag set.
    #[error("schema violation: {0}")]
    Schema(String),

    /// An entity, relation, or label id is unknown.
    #[error("unknown id: {0}")]
    UnknownId(String),

    /// A checkpoint or data file could not be interpreted.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
