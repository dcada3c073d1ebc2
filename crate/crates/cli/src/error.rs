use dynhd::HdError;
use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Data(_) => 2,
            Self::Numeric(_) => 3,
        }
    }
}

impl From<HdError> for CliError {
    fn from(e: HdError) -> Self {
        match e {
            HdError::NonFinite(_) => Self::Numeric(e.to_string()),
            HdError::Config(_) => Self::Config(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait ConfigContext<T> {
    /// Reclassifies any library error as a configuration error.
    fn config_err(self) -> CliResult<T>;
}

impl<T> ConfigContext<T> for dynhd::Result<T> {
    fn config_err(self) -> CliResult<T> {
        self.map_err(|e| match e {
            HdError::NonFinite(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        })
    }
}
