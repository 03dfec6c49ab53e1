use std::path::Path;

use formu_core::llm::LlmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config, input files or failed validation.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    ParseFailed(String),
    /// Writing outputs failed.
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Transport(_) => 3,
            CliError::ParseFailed(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn read(path: &Path, e: impl ToString) -> Self {
        CliError::Usage(format!("{}: {}", path.display(), e.to_string()))
    }

    pub fn write(path: &Path, e: impl ToString) -> Self {
        CliError::Io(format!("{}: {}", path.display(), e.to_string()))
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Transport { .. } | LlmError::Request { .. } | LlmError::BadResponse(_) => {
                CliError::Transport(e.to_string())
            }
            LlmError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
