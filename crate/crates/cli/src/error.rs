use std::path::PathBuf;

use spps_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Exit status reported for usage and parse failures.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when the model's validity conditions are violated.
pub const EXIT_MODEL: i32 = 3;
/// Exit status when a fit or inversion has no acceptable solution.
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Model(#[from] CoreError),

    #[error("{0}")]
    Infeasible(String),

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
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Config { .. } => EXIT_USAGE,
            CliError::Io { .. } => 1,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Model(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::IncompatibleUnits { .. }
                | CoreError::Inconsistent(_) => EXIT_USAGE,
                CoreError::SmallRotation { .. }
                | CoreError::Domain(_)
                | CoreError::InsufficientExtent { .. }
                | CoreError::GridTooCoarse(_)
                | CoreError::UnderResolved { .. } => EXIT_MODEL,
                CoreError::FitNotConverged { .. }
                | CoreError::InsufficientDecay { .. }
                | CoreError::Unidentifiable(_) => EXIT_INFEASIBLE,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
