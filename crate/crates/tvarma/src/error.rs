use std::path::PathBuf;

use tvarma_core::ErrorKind;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tvarma_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error("{context}: {source}")]
    Csv { context: String, source: csv::Error },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{failed} verification check(s) failed")]
    VerifyFailed { failed: usize },
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const DATA: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => exit::CONFIG,
                ErrorKind::Numeric => exit::NUMERIC,
                ErrorKind::Data => exit::DATA,
            },
            CliError::Io { .. } | CliError::Json { .. } | CliError::Config(_) => exit::CONFIG,
            CliError::Csv { .. } | CliError::Data(_) => exit::DATA,
            CliError::VerifyFailed { .. } => exit::NUMERIC,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
