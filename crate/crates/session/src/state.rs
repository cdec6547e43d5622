//! Session aggregate: a pure fold over the event log.

use std::collections::{BTreeMap, BTreeSet};

use corrbelief::mcmcp::{McmcpChain, Step, TimedResponse, TrialView};
use corrbelief::{CorrelationDataset, ElicitationRecord, FitScore};
use serde::{Deserialize, Serialize};

use crate::config::Treatment;
use crate::error::{Result, SessionError};
use crate::event::{EventRecord, SessionEvent};
use crate::exclusion::ExclusionFlag;
use crate::overlay::Overlay;
use crate::plan::{TrialDescriptor, TrialKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Active,
    Sealed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AwaitingPrior,
    AwaitingViewAck,
    AwaitingPosterior,
    Choosing,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub descriptor: TrialDescriptor,
    pub prior: Option<ElicitationRecord>,
    pub prior_at_ms: Option<u64>,
    pub dataset: Option<CorrelationDataset>,
    pub overlay: Option<Overlay>,
    pub viewed_at_ms: Option<u64>,
    pub posterior: Option<ElicitationRecord>,
    pub posterior_at_ms: Option<u64>,
    pub chain: Option<McmcpChain>,
    pub responses: Vec<TimedResponse>,
}

impl TrialState {
    fn new(descriptor: TrialDescriptor, mcmcp_trials: usize) -> Result<Self> {
        let chain = match descriptor.kind {
            TrialKind::Choice => Some(McmcpChain::start(descriptor.seed, mcmcp_trials)?.0),
            _ => None,
        };
        Ok(TrialState {
            descriptor,
            prior: None,
            prior_at_ms: None,
            dataset: None,
            overlay: None,
            viewed_at_ms: None,
            posterior: None,
            posterior_at_ms: None,
            chain,
            responses: Vec::new(),
        })
    }

    pub fn stage(&self) -> Stage {
        match self.descriptor.kind {
            TrialKind::LineCone if self.prior.is_none() => Stage::AwaitingPrior,
            TrialKind::LineCone => Stage::Complete,
            TrialKind::Choice => match &self.chain {
                Some(c) if !c.is_done() => Stage::Choosing,
                _ => Stage::Complete,
            },
            TrialKind::Update => match (&self.prior, self.viewed_at_ms, &self.posterior) {
                (None, _, _) => Stage::AwaitingPrior,
                (Some(_), None, _) => Stage::AwaitingViewAck,
                (Some(_), Some(_), None) => Stage::AwaitingPosterior,
                _ => Stage::Complete,
            },
        }
    }

    /// Server-side time between viewing the data and submitting the posterior.
    pub fn view_duration_ms(&self) -> Option<u64> {
        Some(self.posterior_at_ms?.saturating_sub(self.viewed_at_ms?))
    }

    pub fn choice_view(&self) -> Option<TrialView> {
        self.chain.as_ref()?.pending().map(|t| t.view())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub participant_id: String,
    pub study_id: String,
    pub assigned_treatment: Treatment,
    pub assignment_index: u64,
    pub seed: u64,
    pub created_at_ms: u64,
    pub sealed_at_ms: Option<u64>,
    /// Sequence number of the last applied event.
    pub last_seq: u64,
    pub cursor: usize,
    pub trials: Vec<TrialState>,
    pub attention: BTreeMap<String, String>,
    pub scores: Vec<FitScore>,
    pub exclusion_flags: BTreeSet<ExclusionFlag>,
    pub status: SessionStatus,
}

impl SessionState {
    /// Rebuilds a session from its full log.
    pub fn replay(records: &[EventRecord]) -> Result<Self> {
        let (first, rest) = records
            .split_first()
            .ok_or_else(|| SessionError::Storage("empty event log".into()))?;
        let mut state = Self::from_created(first)?;
        for r in rest {
            state.apply(r)?;
        }
        Ok(state)
    }

    pub fn from_created(record: &EventRecord) -> Result<Self> {
        let SessionEvent::Created {
            session_id,
            participant_id,
            study_id,
            treatment,
            assignment_index,
            seed,
            mcmcp_trials,
            plan,
        } = &record.event
        else {
            return Err(SessionError::Storage("log does not start with a creation event".into()));
        };
        if record.seq != 1 {
            return Err(SessionError::Storage(format!("creation event has seq {}", record.seq)));
        }
        Ok(SessionState {
            session_id: session_id.clone(),
            participant_id: participant_id.clone(),
            study_id: study_id.clone(),
            assigned_treatment: *treatment,
            assignment_index: *assignment_index,
            seed: *seed,
            created_at_ms: record.at_ms,
            sealed_at_ms: None,
            last_seq: 1,
            cursor: 0,
            trials: plan.iter().cloned().map(|d| TrialState::new(d, *mcmcp_trials)).collect::<Result<_>>()?,
            attention: BTreeMap::new(),
            scores: Vec::new(),
            exclusion_flags: BTreeSet::new(),
            status: SessionStatus::Active,
        })
    }

    pub fn current(&self) -> Option<&TrialState> {
        self.trials.get(self.cursor)
    }

    pub fn all_trials_complete(&self) -> bool {
        self.cursor >= self.trials.len()
    }

    /// Index of `trial_id` if it is the current trial and at `stage`.
    pub fn expect_stage(&self, trial_id: &str, stage: Stage) -> Result<usize> {
        if self.status == SessionStatus::Sealed {
            return Err(SessionError::Sealed(self.session_id.clone()));
        }
        let Some(pos) = self.trials.iter().position(|t| t.descriptor.trial_id == trial_id) else {
            return Err(SessionError::InvalidPayload(format!("no trial `{trial_id}` in this session")));
        };
        if pos != self.cursor {
            return Err(SessionError::OutOfOrder(format!(
                "trial `{trial_id}` is not current (current is {})",
                self.current().map_or("none", |t| t.descriptor.trial_id.as_str())
            )));
        }
        let actual = self.trials[pos].stage();
        if actual != stage {
            return Err(SessionError::OutOfOrder(format!("trial `{trial_id}` is at {actual:?}, not {stage:?}")));
        }
        Ok(pos)
    }

    /// Applies one event. Rejects events that do not fit the current state, so a
    /// corrupted or reordered log fails loudly instead of replaying silently.
    pub fn apply(&mut self, record: &EventRecord) -> Result<()> {
        if record.seq != self.last_seq + 1 {
            return Err(SessionError::Storage(format!("expected seq {}, got {}", self.last_seq + 1, record.seq)));
        }
        let at = record.at_ms;
        match &record.event {
            SessionEvent::Created { .. } => {
                return Err(SessionError::Storage("second creation event".into()));
            }
            SessionEvent::PriorSubmitted { trial_id, record: r, dataset, overlay } => {
                let i = self.expect_stage(trial_id, Stage::AwaitingPrior)?;
                let t = &mut self.trials[i];
                t.prior = Some(*r);
                t.prior_at_ms = Some(at);
                t.dataset = dataset.clone();
                t.overlay = overlay.clone();
            }
            SessionEvent::ViewAcknowledged { trial_id } => {
                let i = self.expect_stage(trial_id, Stage::AwaitingViewAck)?;
                self.trials[i].viewed_at_ms = Some(at);
            }
            SessionEvent::PosteriorSubmitted { trial_id, record: r } => {
                let i = self.expect_stage(trial_id, Stage::AwaitingPosterior)?;
                self.trials[i].posterior = Some(*r);
                self.trials[i].posterior_at_ms = Some(at);
            }
            SessionEvent::ChoiceRecorded { trial_id, trial_index, side, duration_ms } => {
                let i = self.expect_stage(trial_id, Stage::Choosing)?;
                let t = &mut self.trials[i];
                let chain = t.chain.as_mut().expect("choice trials carry a chain");
                let pending = *chain.pending().expect("an unfinished chain has a pending trial");
                if pending.trial_index != *trial_index {
                    return Err(SessionError::OutOfOrder(format!(
                        "choice for trial index {trial_index}, expected {}",
                        pending.trial_index
                    )));
                }
                let _: Step = chain.record_choice(&pending, pending.choice_for_side(*side))?;
                t.responses.push(TimedResponse { side: *side, duration_ms: *duration_ms });
            }
            SessionEvent::AttentionAnswered { item_id, answer } => {
                if self.status == SessionStatus::Sealed {
                    return Err(SessionError::Sealed(self.session_id.clone()));
                }
                self.attention.insert(item_id.clone(), answer.clone());
            }
            SessionEvent::Sealed { scores, exclusions } => {
                if self.status == SessionStatus::Sealed {
                    return Err(SessionError::Sealed(self.session_id.clone()));
                }
                if !self.all_trials_complete() {
                    return Err(SessionError::OutOfOrder("sealing before the last trial".into()));
                }
                self.scores = scores.clone();
                self.exclusion_flags = exclusions.clone();
                self.sealed_at_ms = Some(at);
                self.status = SessionStatus::Sealed;
            }
        }
        while self.current().is_some_and(|t| t.stage() == Stage::Complete) {
            self.cursor += 1;
        }
        self.last_seq = record.seq;
        Ok(())
    }
}
