//! Command-line error categories mapped to process exit codes.

use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration (exit 2).
    Config(String),
    /// A numerical-domain failure aborted the requested computation (exit 3).
    Numerical(String),
    /// A required input artifact does not exist (exit 4).
    MissingInput(PathBuf),
    /// Anything else (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingInput(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::MissingInput(path) => write!(f, "missing input: {}", path.display()),
            CliError::Other(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mixcert_core::Error> for CliError {
    fn from(e: mixcert_core::Error) -> Self {
        use mixcert_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::SchemaMismatch(_) | E::WeightSum(_) | E::EmptyPartition { .. } | E::Domain(_) => {
                CliError::Config(e.to_string())
            }
            E::NumericalDomain { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("I/O error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("JSON error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(format!("CSV error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
