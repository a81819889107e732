//! Manifest runner and helpers behind the `pseudolab` binary.

pub mod dist;
pub mod manifest;
pub mod run;

pub use manifest::Manifest;
pub use run::{execute, load_manifest, run_manifest, RunOptions, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Version of the CSV column layout.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
        }
    }

    /// Prefix the message with the measurement it came from.
    pub fn within(self, id: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("measurement {id}: {m}")),
            CliError::Budget(m) => CliError::Budget(format!("measurement {id}: {m}")),
            CliError::Io(m) => CliError::Io(format!("measurement {id}: {m}")),
        }
    }
}

/// Variant name of a library error, e.g. `ArityMismatch`.
pub fn error_kind(e: &pseudolab::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default()
        .to_string()
}

impl From<pseudolab::Error> for CliError {
    fn from(e: pseudolab::Error) -> Self {
        let msg = format!("{}: {e}", error_kind(&e));
        match e {
            pseudolab::Error::BudgetExceeded(_) => CliError::Budget(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("ParseError: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("I/O error: {e}"))
    }
}
