//! Scenario runner for `plasmon_qse`: reads a TOML scenario, runs one stage
//! of the pipeline and writes CSV artifacts plus a `run.json` summary.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod run;

pub use config::{ScenarioConfig, DEFAULT_CONFIG_TOML};

/// Process exit code for invalid configuration or unusable paths.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] plasmon_qse::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    /// Exit code: configuration and file-system problems give 2, numerical
    /// failures give 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(plasmon_qse::Error::Io(_)) => EXIT_CONFIG,
            CliError::Core(e) if e.is_config() => EXIT_CONFIG,
            CliError::Core(_) | CliError::SelfTest(_) => EXIT_NUMERICAL,
        }
    }
}
