use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid belief parameters: mu={mu}, sigma={sigma}")]
    InvalidBelief { mu: f64, sigma: f64 },

    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid elicitation: {0}")]
    InvalidElicitation(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("correlation {0} outside the open interval (-1, 1)")]
    RhoOutOfRange(f64),

    #[error("value {0} outside [-1, 1]")]
    OutOfRange(f64),

    #[error("grids do not share the same points")]
    GridMismatch,

    #[error("sampler failure: acceptance rate {rate:.4} below {min}")]
    SamplerFailure { rate: f64, min: f64 },

    #[error("chain error: {0}")]
    Chain(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
