use std::path::PathBuf;

use boltzworld::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Incompatible(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 validation, 2 I/O, 3 incompatibility.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Incompatible(_) => 3,
            CliError::Core(e) => match e {
                Error::Io { .. } => 2,
                Error::Csv(c) if c.is_io_error() => 2,
                Error::Incompatible(_) | Error::SchemaMismatch(_) | Error::Checkpoint(_) => 3,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
