use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit status: 1 usage, 2 I/O, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }
}

impl From<cellfree_apg::Error> for CliError {
    fn from(e: cellfree_apg::Error) -> Self {
        use cellfree_apg::Error as E;
        match e {
            E::InvalidConfig(_) | E::Domain(_) | E::Unsupported(_) => CliError::Usage(e.to_string()),
            E::NonFinite(_) => CliError::Internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
