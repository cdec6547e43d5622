//! Simulated-participant fleets and the driver that walks one agent through a
//! session using only what a client would see.

use corrbelief::belief::BoundedNormal;
use corrbelief::mcmcp::{ChoiceResponse, ChoiceTrial, PresentationOrder};
use corrbelief::{AgentKind, CorrelationDataset, ElicitationPayload, ElicitationRecord, SimulatedParticipant};
use corrbelief_session::plan::TrialKind;
use corrbelief_session::{SessionService, Stage, StudyConfig, StudyKind, VirtualClock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentTemplate {
    #[serde(flatten)]
    pub kind: AgentKind,
    #[serde(default = "one")]
    pub choice_noise: f64,
}

fn one() -> f64 {
    1.0
}

/// Ranges the per-pair prior beliefs are drawn from, uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefRanges {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
}

impl Default for BeliefRanges {
    fn default() -> Self {
        BeliefRanges { mu: [-0.9, 0.9], sigma: [0.05, 0.25] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub sessions: usize,
    /// Templates assigned to sessions round-robin.
    pub agents: Vec<AgentTemplate>,
    #[serde(default)]
    pub beliefs: BeliefRanges,
    /// Virtual time spent on each elicitation or acknowledgement.
    #[serde(default = "default_step_ms")]
    pub step_ms: u64,
    /// Reported response time for each forced choice.
    #[serde(default = "default_choice_ms")]
    pub choice_ms: u64,
    #[serde(default = "yes")]
    pub answer_attention: bool,
}

fn default_step_ms() -> u64 {
    60_000
}

fn default_choice_ms() -> u64 {
    900
}

fn yes() -> bool {
    true
}

impl FleetSpec {
    pub fn validate(&self, study: &StudyConfig) -> Result<()> {
        if self.sessions == 0 || self.agents.is_empty() {
            return Err(CliError::Config("empty fleet: need at least one session and one agent".into()));
        }
        let [lo, hi] = self.beliefs.mu;
        let [slo, shi] = self.beliefs.sigma;
        if !(-1.0 <= lo && lo <= hi && hi <= 1.0) || !(0.0 < slo && slo <= shi && shi.is_finite()) {
            return Err(CliError::Config("belief ranges must satisfy -1<=mu0<=mu1<=1 and 0<sigma0<=sigma1".into()));
        }
        for a in &self.agents {
            let probe = BoundedNormal::new(0.0, 0.1)?;
            SimulatedParticipant::new(probe, a.kind, a.choice_noise).map_err(|e| CliError::Config(e.to_string()))?;
            if a.kind == AgentKind::LuceResponder && study.study_kind != StudyKind::ElicitationComparison {
                return Err(CliError::Config("LuceResponder agents cannot update beliefs; use them for elicitation comparison only".into()));
            }
        }
        Ok(())
    }

    pub fn template(&self, session_index: usize) -> AgentTemplate {
        self.agents[session_index % self.agents.len()]
    }
}

/// Study config with the fleet attached under `"fleet"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(flatten)]
    pub study: StudyConfig,
    pub fleet: FleetSpec,
}

fn derive(seed: u64, a: u64, b: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(a.wrapping_mul(0x1_0000_0001).wrapping_add(b));
    rng.random()
}

/// Prior belief of session `session_index` about pair `pair_index`.
pub fn draw_belief(ranges: &BeliefRanges, seed: u64, session_index: usize, pair_index: usize) -> Result<BoundedNormal<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, session_index as u64, pair_index as u64));
    let u = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let mu = u(&mut rng, ranges.mu);
    let sigma = u(&mut rng, ranges.sigma);
    Ok(BoundedNormal::new(mu, sigma)?)
}

fn payload(r: &ElicitationRecord) -> ElicitationPayload {
    ElicitationPayload { mu: r.mu, b_lower: r.b_lower, b_upper: r.b_upper }
}

/// Walks `session_id` to completion with a simulated participant.
pub fn drive_session(
    service: &SessionService,
    clock: &VirtualClock,
    fleet: &FleetSpec,
    seed: u64,
    session_index: usize,
    session_id: &str,
) -> Result<()> {
    let context = |e: corrbelief_session::SessionError, what: &str| {
        CliError::Runtime(format!("session {session_id} ({what}): {e}"))
    };
    let config = service.config(&service.session(session_id)?.study_id)?;
    let template = fleet.template(session_index);
    if fleet.answer_attention {
        for item in &config.attention_checks {
            clock.advance(session_id, fleet.step_ms);
            service.answer_attention(session_id, &item.id, &item.answer).map_err(|e| context(e, "attention"))?;
        }
    }
    let mut choice_rng = ChaCha8Rng::seed_from_u64(derive(seed, session_index as u64, u64::MAX));
    // The agent's current belief for the trial in progress, once its prior is in.
    let mut agent: Option<SimulatedParticipant> = None;
    while let Some(t) = service.current_trial(session_id)?.trial {
        let pair_index = config.variable_pairs.iter().position(|p| p.id == t.pair.id).unwrap_or(0);
        let fresh = || -> Result<SimulatedParticipant> {
            let belief = draw_belief(&fleet.beliefs, seed, session_index, pair_index)?;
            Ok(SimulatedParticipant::new(belief, template.kind, template.choice_noise)?)
        };
        let where_ = format!("trial {}", t.trial_id);
        match (t.kind, t.stage) {
            (TrialKind::Choice, Stage::Choosing) => {
                let view = t.choice.expect("choosing stage carries options");
                let responder = fresh()?;
                let trial = ChoiceTrial {
                    option_current: view.left_rho,
                    option_proposal: view.right_rho,
                    trial_index: view.trial_index,
                    presentation_order: PresentationOrder::CurrentLeft,
                };
                let side = trial.side_for_choice(responder.answer_choice(&trial, &mut choice_rng));
                clock.advance(session_id, fleet.choice_ms);
                let r = ChoiceResponse { trial_index: view.trial_index, side, duration_ms: fleet.choice_ms };
                service.submit_choice(session_id, &t.trial_id, r).map_err(|e| context(e, &where_))?;
            }
            (_, Stage::AwaitingPrior) => {
                let a = fresh()?;
                let record = a.elicit()?;
                clock.advance(session_id, fleet.step_ms);
                service.submit_prior(session_id, &t.trial_id, payload(&record)).map_err(|e| context(e, &where_))?;
                // From here on the agent holds the belief it reported.
                agent = Some(a.with_belief(record.fitted));
            }
            (_, Stage::AwaitingViewAck) => {
                clock.advance(session_id, fleet.step_ms);
                service.acknowledge_view(session_id, &t.trial_id).map_err(|e| context(e, &where_))?;
            }
            (_, Stage::AwaitingPosterior) => {
                let view = t.dataset.expect("posterior stage carries the dataset");
                let data = CorrelationDataset::from_points(view.points, 0.0)?;
                let current = agent.take().ok_or_else(|| CliError::Runtime(format!("{where_}: no prior held")))?;
                let record = current.update_after_data(&data)?.elicit()?;
                clock.advance(session_id, fleet.step_ms);
                service.submit_posterior(session_id, &t.trial_id, payload(&record)).map_err(|e| context(e, &where_))?;
            }
            (kind, stage) => {
                return Err(CliError::Runtime(format!("{where_}: unexpected {kind:?} at {stage:?}")));
            }
        }
    }
    Ok(())
}
