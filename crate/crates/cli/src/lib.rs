//! Front end for the `kerrnoise` binary: configuration, commands and
//! file output. The library half exists so the commands can be driven from
//! integration tests without a subprocess.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use kerrnoise::ErrorCategory;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_NUMERICS: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] kerrnoise::Error),

    #[error("cannot write output: {0}")]
    Output(String),

    #[error("oracle check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Input => EXIT_CONFIG,
                ErrorCategory::Physics => EXIT_PHYSICS,
                ErrorCategory::Numerics => EXIT_NUMERICS,
            },
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::CheckFailed(_) => EXIT_NUMERICS,
        }
    }
}
