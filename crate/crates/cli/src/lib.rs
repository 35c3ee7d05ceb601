//! Library side of the `tot-ipm` command-line tool.

pub mod benchmark;
pub mod generate;
pub mod instance;
pub mod report;
pub mod solve;
pub mod verify;

use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("property failure: {0}")]
    Property(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property(_) => 1,
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<instance::InstanceError> for CliError {
    fn from(e: instance::InstanceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<tot_core::TotError> for CliError {
    fn from(e: tot_core::TotError) -> Self {
        match e {
            tot_core::TotError::InvalidInput(_) | tot_core::TotError::ShapeMismatch { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

pub(crate) fn write_output(path: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
        }
    }
}
