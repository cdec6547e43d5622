//! Beliefs about correlation coefficients.
//!
//! * [`belief`]: truncated-normal beliefs over ρ and Line+Cone responses.
//! * [`dataset`]: bivariate normal datasets and the congruence rule.
//! * [`mcmcp`]: the forced-choice MCMC-with-people chain.
//! * [`bayes`]: Prior-only, Bayesian-Informed and Bayesian-Uniform posteriors.
//! * [`metrics`]: MAE and KLD between elicited and predicted beliefs.
//! * [`sim`]: simulated participants.
//!
//! The numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the rest of the system uses.

pub mod bayes;
pub mod belief;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod mcmcp;
pub mod metrics;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BoundedNormalBelief = belief::BoundedNormal<f64>;
pub type ElicitationRecord = belief::ElicitationRecord<f64>;
pub type ElicitationPayload = belief::ElicitationPayload<f64>;
pub type RhoGrid = grid::RhoGrid<f64>;
pub type CorrelationDataset = dataset::CorrelationDataset<f64>;
pub type CongruenceSpec = dataset::CongruenceSpec<f64>;
pub type PriorSpec = bayes::PriorSpec<f64>;
pub type PosteriorResult = bayes::PosteriorResult<f64>;

pub use bayes::{McmcConfig, Model};
pub use dataset::Congruence;
pub use mcmcp::{ChainSummary, Choice, ChoiceTrial, McmcpChain, Side};
pub use metrics::FitScore;
pub use sim::{AgentKind, SimulatedParticipant};
