//! Command implementations behind the `mflq` binary. Each command returns an
//! [`Outcome`] holding the exit code, the human-readable table and the JSON
//! report, so the same code paths can be driven from tests.

pub mod args;
mod commands;
mod report;
mod verify;

use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

pub use commands::{cmd_alm, cmd_example, cmd_simulate, cmd_solve, example_text, EXAMPLE_ALM, EXAMPLE_LIFTED};
pub use report::{fmt6, SCHEMA_VERSION};
pub use verify::cmd_verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<mflq_core::Error> for CliError {
    fn from(e: mflq_core::Error) -> Self {
        use mflq_core::Error as E;
        match e {
            E::Json(_) => CliError::Parse(e.to_string()),
            E::NotPositiveDefinite { .. } | E::NonFinite { .. } | E::SingularTheta2 { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub text: String,
    pub report: Value,
}

impl Outcome {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("reports are serializable");
        s.push('\n');
        s
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

/// Worker count from `MFLQ_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("MFLQ_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("MFLQ_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}
