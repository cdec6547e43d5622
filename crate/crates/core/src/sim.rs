//! Simulated responders standing in for human participants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{posterior_grid, PriorSpec};
use crate::belief::{fit_from_elicitation, BoundedNormal, ElicitationRecord, SIGMA_MIN};
use crate::dataset::CorrelationDataset;
use crate::error::{Error, Result};
use crate::grid::RhoGrid;
use crate::mcmcp::{Choice, ChoiceTrial, McmcpChain, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AgentKind {
    /// Answers forced choices by the Luce rule; has no update rule.
    LuceResponder,
    /// Updates to the Bayesian-Informed posterior.
    BayesianAgent,
    /// Pools its prior (with `weight`) and the Bayesian posterior.
    StubbornAgent { weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParticipantSpec", into = "ParticipantSpec")]
pub struct SimulatedParticipant {
    belief: BoundedNormal<f64>,
    choice_noise: f64,
    kind: AgentKind,
}

/// Study-config form: `{"kind": ..., "weight"?: ..., "belief": {mu, sigma}, "choice_noise"?: τ}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParticipantSpec {
    #[serde(flatten)]
    pub kind: AgentKind,
    pub belief: BoundedNormal<f64>,
    #[serde(default = "default_noise")]
    pub choice_noise: f64,
}

fn default_noise() -> f64 {
    1.0
}

impl TryFrom<ParticipantSpec> for SimulatedParticipant {
    type Error = Error;

    fn try_from(s: ParticipantSpec) -> Result<Self> {
        Self::new(s.belief, s.kind, s.choice_noise)
    }
}

impl From<SimulatedParticipant> for ParticipantSpec {
    fn from(p: SimulatedParticipant) -> Self {
        ParticipantSpec { kind: p.kind, belief: p.belief, choice_noise: p.choice_noise }
    }
}

impl SimulatedParticipant {
    pub fn new(belief: BoundedNormal<f64>, kind: AgentKind, choice_noise: f64) -> Result<Self> {
        if !(choice_noise >= 0.0 && choice_noise.is_finite()) {
            return Err(Error::Invalid(format!("choice noise must be >= 0, got {choice_noise}")));
        }
        if let AgentKind::StubbornAgent { weight } = kind {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::Invalid(format!("stubborn weight must lie in [0, 1], got {weight}")));
            }
        }
        Ok(Self { belief, choice_noise, kind })
    }

    pub fn luce(belief: BoundedNormal<f64>) -> Self {
        Self { belief, choice_noise: 1.0, kind: AgentKind::LuceResponder }
    }

    pub fn belief(&self) -> &BoundedNormal<f64> {
        &self.belief
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn choice_noise(&self) -> f64 {
        self.choice_noise
    }

    /// Same participant, now holding `belief`.
    pub fn with_belief(&self, belief: BoundedNormal<f64>) -> Self {
        Self { belief, ..*self }
    }

    /// Probability of picking the proposal: `f(p)^(1/τ) / (f(p)^(1/τ) + f(c)^(1/τ))`.
    pub fn proposal_probability(&self, trial: &ChoiceTrial) -> f64 {
        let lp = self.belief.ln_pdf(trial.option_proposal);
        let lc = self.belief.ln_pdf(trial.option_current);
        if self.choice_noise == 0.0 || lp == f64::NEG_INFINITY || lc == f64::NEG_INFINITY {
            return match lp.partial_cmp(&lc) {
                Some(std::cmp::Ordering::Greater) => 1.0,
                Some(std::cmp::Ordering::Less) => 0.0,
                _ => 0.5,
            };
        }
        1.0 / (1.0 + ((lc - lp) / self.choice_noise).exp())
    }

    pub fn answer_choice<R: Rng + ?Sized>(&self, trial: &ChoiceTrial, rng: &mut R) -> Choice {
        if rng.random::<f64>() < self.proposal_probability(trial) {
            Choice::Proposal
        } else {
            Choice::Current
        }
    }

    /// Drives a fresh chain to completion.
    pub fn run_chain(&self, chain_seed: u64, response_seed: u64, trials: usize) -> Result<McmcpChain> {
        let mut rng = ChaCha8Rng::seed_from_u64(response_seed);
        let (mut chain, mut trial) = McmcpChain::start(chain_seed, trials)?;
        while let Step::Next(next) = chain.record_choice(&trial, self.answer_choice(&trial, &mut rng))? {
            trial = next;
        }
        Ok(chain)
    }

    /// Belief after seeing `dataset`.
    pub fn update_after_data(&self, dataset: &CorrelationDataset<f64>) -> Result<Self> {
        let weight = match self.kind {
            AgentKind::LuceResponder => {
                return Err(Error::Invalid("a Luce responder has no update rule".into()));
            }
            AgentKind::BayesianAgent => 0.0,
            AgentKind::StubbornAgent { weight } => weight,
        };
        let grid = posterior_grid(dataset, &PriorSpec::Informed(self.belief))?;
        let posterior = moment_match(&grid)?;
        let mu = weight * self.belief.mu() + (1.0 - weight) * posterior.mu();
        let sigma = weight * self.belief.sigma() + (1.0 - weight) * posterior.sigma();
        Ok(self.with_belief(BoundedNormal::new(mu, sigma)?))
    }

    /// Reports the belief mean and central 95% interval as a Line+Cone response.
    pub fn elicit(&self) -> Result<ElicitationRecord<f64>> {
        let (lo, hi) = self.belief.central_interval(0.95)?;
        let mean = self.belief.mean().clamp(lo, hi);
        fit_from_elicitation(mean, lo, hi)
    }
}

/// Truncated normal whose mean and central 95% width match `grid`.
pub fn moment_match(grid: &RhoGrid<f64>) -> Result<BoundedNormal<f64>> {
    let target_mean = grid.mean();
    let (lo, hi) = grid.central_interval(0.95)?;
    let target_width = (hi - lo).max(1e-6);
    let mut mu = target_mean.clamp(-1.0, 1.0);
    let mut sigma = (target_width / 3.92).max(SIGMA_MIN);
    for _ in 0..200 {
        let b = BoundedNormal::new(mu, sigma)?;
        let (blo, bhi) = b.central_interval(0.95)?;
        let mean_gap = target_mean - b.mean();
        let ratio = target_width / (bhi - blo);
        if mean_gap.abs() < 1e-10 && (ratio - 1.0).abs() < 1e-10 {
            break;
        }
        mu = (mu + mean_gap).clamp(-1.0, 1.0);
        sigma = (sigma * ratio).clamp(SIGMA_MIN, 10.0);
    }
    BoundedNormal::new(mu, sigma)
}
