use std::path::PathBuf;

use ris_crb::CrbError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    /// A value that parsed but is out of range or inconsistent.
    #[error("{path}:{line}: {key}: {message}")]
    Validation {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Numerical(#[from] CrbError),

    /// One or more oracle checks of the `validate` suite failed.
    #[error("oracle suite failed: {0}")]
    Oracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad input or failed validation, 3 for
    /// numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Oracle(_) | CliError::Usage(_) => 2,
            CliError::Numerical(e) => match e {
                CrbError::InvalidInput(_) | CrbError::Domain(_) | CrbError::UnsupportedMethod(_) => 2,
                _ => 3,
            },
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
