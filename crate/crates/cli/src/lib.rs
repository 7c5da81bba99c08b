//! Command-line workflows around `vsmtune-core`: network files, the bundled
//! twelve-bus case, optimize/simulate/compare/sweep runs and CSV output.

pub mod commands;
pub mod network_file;
pub mod output;
pub mod scenario;

pub use network_file::{Defaults, DisturbanceSpec, NetworkFile, TWELVE_BUS_JSON};
pub use scenario::{Scenario, SeedPoint, SweepPoint, SweepRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input file, flag or configuration. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Numerical or I/O failure while running. Exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<vsmtune_core::Error> for CliError {
    fn from(e: vsmtune_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}
