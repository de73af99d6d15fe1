use std::path::PathBuf;

use kscc::KsccError;
use thiserror::Error;

/// Failures surfaced by the command-line tool, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config, or a kernel that does not fit the data.
    #[error("{0}")]
    Usage(String),

    /// Unreadable or malformed data files.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Numerical(String),

    /// The data has no more points than a flat of the requested dimension needs.
    #[error("{n} points cannot support flats of dimension {ell}; need at least {}", ell + 2)]
    TooFewPoints { n: usize, ell: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::TooFewPoints { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<KsccError> for CliError {
    fn from(e: KsccError) -> Self {
        match e {
            KsccError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            KsccError::TooFewPoints { n, ell } => CliError::TooFewPoints { n, ell },
            KsccError::InvalidInput(_) => CliError::Input(e.to_string()),
            KsccError::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
