use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid value for `{field}`: {reason}")]
    Range { field: String, reason: String },

    #[error("{0}")]
    AllDiverged(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(lmsf_core::Error),
}

impl CliError {
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_DIVERGED: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Range { .. } => Self::EXIT_CONFIG,
            CliError::AllDiverged(_) => Self::EXIT_DIVERGED,
            CliError::Io { .. } => Self::EXIT_IO,
            CliError::Core(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<lmsf_core::Error> for CliError {
    fn from(e: lmsf_core::Error) -> Self {
        use lmsf_core::Error as E;
        match e {
            E::InvalidParameter { field, reason } => CliError::Range {
                field: field.to_string(),
                reason,
            },
            E::UnknownSweepParameter(_) => CliError::Config(e.to_string()),
            E::TraceTooShort { .. } => CliError::Range {
                field: "iters".into(),
                reason: e.to_string(),
            },
            E::AllRunsDiverged { .. } => CliError::AllDiverged(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
