//! Scenario runner for the `scatter1d` engine: figure presets, scenario files, CSV and JSON
//! outputs.

pub mod output;
pub mod pipeline;
pub mod scenario;

use std::path::PathBuf;

/// Failures of a run, mapped onto process exit codes by [`RunError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] scatter1d::Error),

    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

impl RunError {
    /// 2 for rejected input, 3 for numerical failures, 1 for output failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Engine(scatter1d::Error::Io(_)) => 1,
            RunError::Engine(e) if e.is_validation() => 2,
            RunError::Engine(_) => 3,
            RunError::Read { .. } | RunError::Usage(_) => 2,
            RunError::Write { .. } | RunError::Csv(_) => 1,
        }
    }
}
