//! Config loading and subcommands behind the `urbannav` binary.
//!
//! Exit codes are a stable contract: 0 on success (whatever the trial
//! outcome), 2 for config or schema errors, 3 for I/O failures.

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<urbannav::Error> for CliError {
    fn from(e: urbannav::Error) -> Self {
        match e {
            urbannav::Error::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}
