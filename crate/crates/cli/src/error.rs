use std::io;
use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// A solver guard tripped, such as the lattice step cap.
    #[error("numerical guard tripped: {0}")]
    Guard(mdode::Error),
    #[error("{0}")]
    Solver(mdode::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl From<mdode::Error> for CliError {
    fn from(e: mdode::Error) -> Self {
        match e {
            mdode::Error::StepCap { .. } => CliError::Guard(e),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Guard(_) => 2,
            _ => 1,
        }
    }
}
