use thiserror::Error;

/// Exit codes: 0 success, 1 runtime failure, 2 usage (reported by clap), 3 bad configuration.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<corrbelief::Error> for CliError {
    fn from(e: corrbelief::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<corrbelief_session::SessionError> for CliError {
    fn from(e: corrbelief_session::SessionError) -> Self {
        match e {
            corrbelief_session::SessionError::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
