use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid study config: {0}")]
    Config(String),
    #[error("unknown study `{0}`")]
    UnknownStudy(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("participant `{participant}` already has a session in study `{study}`")]
    DuplicateParticipant { study: String, participant: String },
    /// A request that is well-formed but arrives at the wrong point in the trial flow.
    #[error("out of order: {0}")]
    OutOfOrder(String),
    #[error("session `{0}` is sealed")]
    Sealed(String),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error(transparent)]
    Model(#[from] corrbelief::Error),
    #[error("storage: {0}")]
    Storage(String),
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for SessionError {
    fn from(e: serde_json::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}

pub type Result<T, E = SessionError> = std::result::Result<T, E>;
