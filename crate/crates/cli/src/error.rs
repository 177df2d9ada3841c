use assassin_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 1 i/o, 2 usage, 3 numeric domain, 4 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(CoreError::Topology(_)) => 2,
            CliError::Core(CoreError::NonConvergence { .. }) => 4,
            CliError::Core(_) => 3,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}
