use thiserror::Error;

/// Errors raised by the hyperdimensional pipeline.
#[derive(Debug, Error)]
pub enum HdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value detected: {0}")]
    NonFinite(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HdError>;

impl HdError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HdError::InvalidArgument(msg.into())
    }
}

/// Returns a dimension error unless `found == expected`.
pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(HdError::Dimension {
            context,
            expected,
            found,
        })
    }
}

impl From<serde_json::Error> for HdError {
    fn from(e: serde_json::Error) -> Self {
        HdError::Serialization(e.to_string())
    }
}
