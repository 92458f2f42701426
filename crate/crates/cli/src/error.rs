use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] moddev_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 2 config error, 3 budget exceeded, 4 internal invariant violation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(moddev_core::Error::BudgetExceeded { .. }) => 3,
            CliError::Core(moddev_core::Error::InvariantViolation(_)) => 4,
            CliError::Config(_) | CliError::Core(_) | CliError::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
