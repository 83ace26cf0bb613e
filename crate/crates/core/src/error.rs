use thiserror::Error;

/// Errors raised by the embedding library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid block size s = {s} for signal of length {n} (need 1 <= s <= n)")]
    InvalidBlockSize { s: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("signal must have at least one entry")]
    EmptySignal,

    #[error("signal entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("distortion is undefined for the zero vector")]
    UndefinedDistortion,

    #[error("unknown signal class `{0}`")]
    UnknownClass(String),

    #[error("embedding is already normalized")]
    AlreadyNormalized,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code for the CLI: 3 for I/O failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
