//! File IO and the command-line front end over `shapes-core`.

pub mod cli;
pub mod json;
pub mod kb;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot load {path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Load { .. } => 2,
        }
    }

    pub(crate) fn load(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        CliError::Load { path: path.into(), message: e.to_string() }
    }
}
