//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Dimensions of two values that must agree do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input data violates a contract (missing sequence, bad label, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A binary file does not follow its format; `offset` is the byte
    /// position at which the reader gave up.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Statistics cannot be normalized (zero variance).
    #[error("normalization error: {0}")]
    Normalization(String),

    /// A histogram or map is degenerate (fewer than two distinct values).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format { offset, message: message.into() }
    }
}
