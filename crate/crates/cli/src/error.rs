use std::path::PathBuf;

use thiserror::Error;

/// Command-level failure; always exit code 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pvol_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no evaluable patients: {0}")]
    NothingToEvaluate(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// Outcome of a command that did not fail as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// At least one patient failed; the others were written.
    PartialFailure,
}

impl Status {
    pub fn from_failures(failed: usize) -> Self {
        if failed == 0 {
            Status::Success
        } else {
            Status::PartialFailure
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::PartialFailure => 2,
        }
    }
}

pub const EXIT_ERROR: u8 = 1;
