use std::fmt;

/// Failure classes mapping onto the process exit codes:
/// 2 config-invalid, 3 budget-exceeded, 4 io-error.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Budget(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config-invalid: {m}"),
            CliError::Budget(m) => write!(f, "budget-exceeded: {m}"),
            CliError::Io(m) => write!(f, "io-error: {m}"),
        }
    }
}

impl From<latcode::Error> for CliError {
    fn from(e: latcode::Error) -> Self {
        match e {
            latcode::Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
