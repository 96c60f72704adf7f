use thiserror::Error;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },

    #[error("index {index} out of range (bound {bound})")]
    OutOfRange { index: u64, bound: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A generation hypothesis did not hold at this prime.
    #[error("p too small: generation check `{check}` failed ({detail})")]
    Generation { check: String, detail: String },

    /// Request exceeds the configured memory/time budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
