//! In-process session service. The HTTP layer is a thin transport over this,
//! and batch simulation drives it directly.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use corrbelief::bayes::{posterior, prior_only, PriorSpec};
use corrbelief::belief::fit_from_elicitation;
use corrbelief::dataset::{generate, resolve_congruence, DEFAULT_CLAMP};
use corrbelief::mcmcp::{ChoiceResponse, Side};
use corrbelief::metrics::score_trial;
use corrbelief::{ElicitationPayload, ElicitationRecord, FitScore};

use crate::clock::Clock;
use crate::config::StudyConfig;
use crate::error::{Result, SessionError};
use crate::event::{EventRecord, SessionEvent};
use crate::exclusion::{evaluate, ExclusionFlag};
use crate::export::ExportBundle;
use crate::overlay::Overlay;
use crate::plan::{assign_treatment, build_plan, TrialKind};
use crate::seed::{mix, mix_str};
use crate::state::{SessionState, SessionStatus, Stage, TrialState};
use crate::store::EventStore;
use crate::view::{ChoiceOutcome, CurrentTrial, DatasetView, PriorOutcome, Progress, TrialPrompt};

struct Study {
    config: StudyConfig,
    registry: Mutex<Registry>,
}

#[derive(Default)]
struct Registry {
    next_index: u64,
    participants: HashMap<String, String>,
    sessions: Vec<String>,
}

pub struct SessionService {
    studies: RwLock<HashMap<String, Arc<Study>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    store: Arc<dyn EventStore>,
    clock: Arc<dyn Clock>,
}

impl SessionService {
    pub fn new(store: Arc<dyn EventStore>, clock: Arc<dyn Clock>) -> Self {
        SessionService { studies: RwLock::default(), sessions: RwLock::default(), store, clock }
    }

    /// Registers `configs` and restores every session already in `store`.
    pub fn open(store: Arc<dyn EventStore>, clock: Arc<dyn Clock>, configs: Vec<StudyConfig>) -> Result<Self> {
        let service = Self::new(store, clock);
        for c in configs {
            service.register_study(c)?;
        }
        for id in service.store.session_ids()? {
            let state = service.store.restore(&id)?;
            let study = service.study(&state.study_id)?;
            let mut reg = study.registry.lock().unwrap();
            reg.next_index = reg.next_index.max(state.assignment_index + 1);
            reg.participants.insert(state.participant_id.clone(), id.clone());
            reg.sessions.push(id.clone());
            drop(reg);
            service.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(state)));
        }
        Ok(service)
    }

    pub fn register_study(&self, config: StudyConfig) -> Result<()> {
        config.validate()?;
        let mut studies = self.studies.write().unwrap();
        if studies.contains_key(&config.study_id) {
            return Err(SessionError::Config(format!("study `{}` registered twice", config.study_id)));
        }
        studies.insert(config.study_id.clone(), Arc::new(Study { config, registry: Mutex::default() }));
        Ok(())
    }

    pub fn config(&self, study_id: &str) -> Result<StudyConfig> {
        Ok(self.study(study_id)?.config.clone())
    }

    fn study(&self, study_id: &str) -> Result<Arc<Study>> {
        self.studies
            .read()
            .unwrap()
            .get(study_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownStudy(study_id.to_string()))
    }

    fn handle(&self, session_id: &str) -> Result<Arc<Mutex<SessionState>>> {
        self.sessions
            .read()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(session_id.to_string()))
    }

    /// Snapshot of one session.
    pub fn session(&self, session_id: &str) -> Result<SessionState> {
        Ok(self.handle(session_id)?.lock().unwrap().clone())
    }

    /// Session ids of a study in creation order.
    pub fn session_ids(&self, study_id: &str) -> Result<Vec<String>> {
        Ok(self.study(study_id)?.registry.lock().unwrap().sessions.clone())
    }

    pub fn create_session(&self, study_id: &str, participant_id: &str) -> Result<CurrentTrial> {
        if participant_id.trim().is_empty() {
            return Err(SessionError::InvalidPayload("participant_id is empty".into()));
        }
        let study = self.study(study_id)?;
        let config = &study.config;
        let mut reg = study.registry.lock().unwrap();
        if reg.participants.contains_key(participant_id) {
            return Err(SessionError::DuplicateParticipant {
                study: study_id.to_string(),
                participant: participant_id.to_string(),
            });
        }
        let index = reg.next_index;
        let treatment = assign_treatment(&config.treatments, config.seed, index);
        let seed = mix_str(config.seed, participant_id);
        let session_id = format!("{study_id}-{index:05}");
        let record = EventRecord {
            seq: 1,
            at_ms: self.clock.now_ms(&session_id),
            event: SessionEvent::Created {
                session_id: session_id.clone(),
                participant_id: participant_id.to_string(),
                study_id: study_id.to_string(),
                treatment,
                assignment_index: index,
                seed,
                mcmcp_trials: config.mcmcp_trials,
                plan: build_plan(config, treatment, seed),
            },
        };
        let state = SessionState::from_created(&record)?;
        self.store.append(&session_id, &[record])?;
        reg.next_index += 1;
        reg.participants.insert(participant_id.to_string(), session_id.clone());
        reg.sessions.push(session_id.clone());
        drop(reg);
        let view = self.prompt(config, &state);
        self.sessions.write().unwrap().insert(session_id, Arc::new(Mutex::new(state)));
        Ok(view)
    }

    pub fn current_trial(&self, session_id: &str) -> Result<CurrentTrial> {
        let state = self.session(session_id)?;
        Ok(self.prompt(&self.study(&state.study_id)?.config, &state))
    }

    fn prompt(&self, config: &StudyConfig, state: &SessionState) -> CurrentTrial {
        let trial = state.current().map(|t| {
            let d = &t.descriptor;
            TrialPrompt {
                trial_id: d.trial_id.clone(),
                index: d.index,
                kind: d.kind,
                stage: t.stage(),
                pair: config.pair(&d.pair_id).map(Into::into).expect("plans only name configured pairs"),
                treatment: d.treatment,
                dataset: DatasetView::of(t),
                choice: t.choice_view(),
            }
        });
        CurrentTrial {
            progress: state.into(),
            participant_id: state.participant_id.clone(),
            treatment: state.assigned_treatment,
            trial,
        }
    }

    pub fn submit_prior(&self, session_id: &str, trial_id: &str, payload: ElicitationPayload) -> Result<PriorOutcome> {
        let handle = self.handle(session_id)?;
        let mut state = handle.lock().unwrap();
        let study = self.study(&state.study_id)?;
        let config = &study.config;
        let i = state.expect_stage(trial_id, Stage::AwaitingPrior)?;
        let record = validate(payload)?;
        let d = state.trials[i].descriptor.clone();
        let (dataset, overlay) = match d.kind {
            TrialKind::Update => {
                let n = d.n.expect("update trials have a sample size");
                let dataset = match (d.rho_pop, d.congruence) {
                    (Some(rho), _) => generate(rho, n, d.seed)?,
                    (None, Some(kind)) => {
                        let target = resolve_congruence(record.mu, kind, DEFAULT_CLAMP, d.seed)?;
                        generate(target.resolved_rho, n, mix(d.seed, 1))?
                    }
                    (None, None) => unreachable!("plans give every update trial a target"),
                };
                let treatment = d.treatment.expect("update trials have a treatment");
                let overlay = Overlay::build(treatment, &dataset, &config.mcmc, config.hop_draws, mix(d.seed, 2))?;
                (Some(dataset), Some(overlay))
            }
            _ => (None, None),
        };
        let event = SessionEvent::PriorSubmitted { trial_id: trial_id.to_string(), record, dataset, overlay };
        self.commit(config, &mut state, event)?;
        Ok(PriorOutcome { progress: (&*state).into(), dataset: DatasetView::of(&state.trials[i]) })
    }

    pub fn acknowledge_view(&self, session_id: &str, trial_id: &str) -> Result<Progress> {
        let handle = self.handle(session_id)?;
        let mut state = handle.lock().unwrap();
        let study = self.study(&state.study_id)?;
        state.expect_stage(trial_id, Stage::AwaitingViewAck)?;
        self.commit(&study.config, &mut state, SessionEvent::ViewAcknowledged { trial_id: trial_id.to_string() })?;
        Ok((&*state).into())
    }

    pub fn submit_posterior(&self, session_id: &str, trial_id: &str, payload: ElicitationPayload) -> Result<Progress> {
        let handle = self.handle(session_id)?;
        let mut state = handle.lock().unwrap();
        let study = self.study(&state.study_id)?;
        state.expect_stage(trial_id, Stage::AwaitingPosterior)?;
        let record = validate(payload)?;
        self.commit(&study.config, &mut state, SessionEvent::PosteriorSubmitted { trial_id: trial_id.to_string(), record })?;
        Ok((&*state).into())
    }

    /// Records one forced choice in the MCMC-P block `chain` (its trial id).
    pub fn submit_choice(&self, session_id: &str, chain: &str, response: ChoiceResponse) -> Result<ChoiceOutcome> {
        let handle = self.handle(session_id)?;
        let mut state = handle.lock().unwrap();
        let study = self.study(&state.study_id)?;
        let i = state.expect_stage(chain, Stage::Choosing)?;
        let pending = state.trials[i].chain.as_ref().and_then(|c| c.pending().copied());
        match pending {
            Some(p) if p.trial_index == response.trial_index => {}
            Some(p) => {
                return Err(SessionError::OutOfOrder(format!(
                    "choice for trial index {}, expected {}",
                    response.trial_index, p.trial_index
                )))
            }
            None => return Err(SessionError::OutOfOrder("no pending choice".into())),
        }
        let event = SessionEvent::ChoiceRecorded {
            trial_id: chain.to_string(),
            trial_index: response.trial_index,
            side: response.side,
            duration_ms: response.duration_ms,
        };
        self.commit(&study.config, &mut state, event)?;
        let next = state.trials[i].choice_view();
        Ok(ChoiceOutcome { progress: (&*state).into(), next })
    }

    pub fn answer_attention(&self, session_id: &str, item_id: &str, answer: &str) -> Result<Progress> {
        let handle = self.handle(session_id)?;
        let mut state = handle.lock().unwrap();
        let study = self.study(&state.study_id)?;
        if state.status == SessionStatus::Sealed {
            return Err(SessionError::Sealed(session_id.to_string()));
        }
        if !study.config.attention_checks.iter().any(|a| a.id == item_id) {
            return Err(SessionError::InvalidPayload(format!("no attention check `{item_id}`")));
        }
        let event = SessionEvent::AttentionAnswered { item_id: item_id.to_string(), answer: answer.to_string() };
        self.commit(&study.config, &mut state, event)?;
        Ok((&*state).into())
    }

    pub fn evaluate_exclusions(&self, session_id: &str) -> Result<BTreeSet<ExclusionFlag>> {
        let state = self.session(session_id)?;
        let config = &self.study(&state.study_id)?.config;
        Ok(evaluate(&state, config, None))
    }

    pub fn export(&self, study_id: &str) -> Result<ExportBundle> {
        let study = self.study(study_id)?;
        let states = self
            .session_ids(study_id)?
            .iter()
            .map(|id| self.session(id))
            .collect::<Result<Vec<_>>>()?;
        ExportBundle::build(&study.config, &states)
    }

    /// Validates, persists, then applies; seals once the last trial completes.
    fn commit(&self, config: &StudyConfig, state: &mut SessionState, event: SessionEvent) -> Result<()> {
        self.append(state, event)?;
        if state.status == SessionStatus::Active && state.all_trials_complete() {
            let scores = fit_scores(config, state)?;
            let end = self.clock.now_ms(&state.session_id);
            let mut probe = state.clone();
            probe.sealed_at_ms = Some(end);
            let exclusions = evaluate(&probe, config, None);
            self.append(state, SessionEvent::Sealed { scores, exclusions })?;
            self.store.write_snapshot(state)?;
        }
        Ok(())
    }

    fn append(&self, state: &mut SessionState, event: SessionEvent) -> Result<()> {
        let record = EventRecord { seq: state.last_seq + 1, at_ms: self.clock.now_ms(&state.session_id), event };
        let mut next = state.clone();
        next.apply(&record)?;
        self.store.append(&state.session_id, std::slice::from_ref(&record))?;
        *state = next;
        Ok(())
    }
}

fn validate(p: ElicitationPayload) -> Result<ElicitationRecord> {
    fit_from_elicitation(p.mu, p.b_lower, p.b_upper).map_err(|e| SessionError::InvalidPayload(e.to_string()))
}

/// Model predictions for one completed update trial: prior-only, informed, uniform.
pub fn trial_predictions(config: &StudyConfig, trial: &TrialState) -> Result<Vec<corrbelief::PosteriorResult>> {
    let (Some(prior), Some(dataset)) = (&trial.prior, &trial.dataset) else {
        return Ok(Vec::new());
    };
    let seed = mix(trial.descriptor.seed, 3);
    Ok(vec![
        prior_only(&prior.fitted, &config.mcmc, seed)?,
        posterior(dataset, &PriorSpec::Informed(prior.fitted), &config.mcmc, mix(seed, 1))?,
        posterior(dataset, &PriorSpec::Uniform, &config.mcmc, mix(seed, 2))?,
    ])
}

fn fit_scores(config: &StudyConfig, state: &SessionState) -> Result<Vec<FitScore>> {
    let mut out = Vec::new();
    for t in state.trials.iter().filter(|t| t.descriptor.kind == TrialKind::Update) {
        let posterior = t.posterior.as_ref().expect("completed update trials have a posterior");
        out.extend(score_trial(&t.descriptor.trial_id, posterior, &trial_predictions(config, t)?)?);
    }
    Ok(out)
}

/// Side that picks the option nearer `target`, for scripted clients and tests.
pub fn side_towards(view: &corrbelief::mcmcp::TrialView, target: f64) -> Side {
    if (view.left_rho - target).abs() <= (view.right_rho - target).abs() {
        Side::Left
    } else {
        Side::Right
    }
}
