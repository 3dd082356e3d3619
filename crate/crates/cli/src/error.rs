use thiserror::Error;

/// Failure classes of the command-line runner; each maps to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
    #[error("archive error: {0}")]
    Archive(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Stage { .. } => 4,
            CliError::Archive(_) => 5,
        }
    }

    pub fn stage(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage: stage.into(),
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Wraps a core error as a failure of `stage`.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T, E: std::fmt::Display> StageContext<T> for std::result::Result<T, E> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| CliError::stage(stage, e))
    }
}
