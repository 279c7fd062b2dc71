use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a command, mapped onto the exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse {what}: {source}")]
    Parse {
        what: String,
        source: serde_json::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] kme_core::Error),
}

impl CliError {
    /// 2 for bad input, 3 numerical, 4 precondition, 5 convergence.
    pub fn exit_code(&self) -> u8 {
        use kme_core::Error as E;
        match self {
            CliError::Core(E::Numerical(_)) => 3,
            CliError::Core(E::Precondition(_)) => 4,
            CliError::Core(E::Convergence { .. }) => 5,
            CliError::Core(E::Structural(_) | E::Domain(_))
            | CliError::Read { .. }
            | CliError::Write { .. }
            | CliError::Parse { .. }
            | CliError::Usage(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
