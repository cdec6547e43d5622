//! Study export: one CSV row per trial plus the full session states as JSON lines.

use std::collections::HashMap;

use corrbelief::Model;
use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;
use crate::error::{Result, SessionError};
use crate::plan::TrialKind;
use crate::state::{SessionState, SessionStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub study_id: String,
    /// The study's configuration, so a saved bundle can be rescored on its own.
    pub config: StudyConfig,
    pub sessions: usize,
    /// True when every session in the bundle is sealed.
    pub sealed: bool,
    pub trials_csv: String,
    pub sessions_jsonl: String,
}

/// One trial of one session, flattened for analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub session_id: String,
    pub participant_id: String,
    pub assigned_treatment: String,
    pub status: String,
    pub exclusions: String,
    pub trial_id: String,
    pub trial_index: usize,
    pub kind: String,
    pub pair_id: String,
    pub round: usize,
    pub treatment: Option<String>,
    pub congruence: Option<String>,
    pub n: Option<usize>,
    pub rho_pop: Option<f64>,
    pub r_sample: Option<f64>,
    pub pre_mu: Option<f64>,
    pub pre_b_lower: Option<f64>,
    pub pre_b_upper: Option<f64>,
    pub pre_ci_width: Option<f64>,
    pub post_mu: Option<f64>,
    pub post_b_lower: Option<f64>,
    pub post_b_upper: Option<f64>,
    pub post_ci_width: Option<f64>,
    pub view_duration_ms: Option<u64>,
    pub chain_mean: Option<f64>,
    pub chain_ci_lower: Option<f64>,
    pub chain_ci_upper: Option<f64>,
    pub chain_acceptance: Option<f64>,
    pub mae_prior_only: Option<f64>,
    pub kld_prior_only: Option<f64>,
    pub mae_bayesian_informed: Option<f64>,
    pub kld_bayesian_informed: Option<f64>,
    pub mae_bayesian_uniform: Option<f64>,
    pub kld_bayesian_uniform: Option<f64>,
}

impl TrialRow {
    pub fn mae(&self, model: Model) -> Option<f64> {
        match model {
            Model::PriorOnly => self.mae_prior_only,
            Model::BayesianInformed => self.mae_bayesian_informed,
            Model::BayesianUniform => self.mae_bayesian_uniform,
        }
    }

    pub fn kld(&self, model: Model) -> Option<f64> {
        match model {
            Model::PriorOnly => self.kld_prior_only,
            Model::BayesianInformed => self.kld_bayesian_informed,
            Model::BayesianUniform => self.kld_bayesian_uniform,
        }
    }
}

pub fn trial_rows(state: &SessionState) -> Result<Vec<TrialRow>> {
    let mut scores: HashMap<(&str, Model), (f64, f64)> = HashMap::new();
    for s in &state.scores {
        scores.insert((s.trial_id.as_str(), s.model), (s.mae, s.kld));
    }
    let exclusions: Vec<String> = state.exclusion_flags.iter().map(|f| format!("{f:?}")).collect();
    state
        .trials
        .iter()
        .map(|t| {
            let d = &t.descriptor;
            let score = |m| scores.get(&(d.trial_id.as_str(), m)).copied();
            let summary = match &t.chain {
                Some(c) if c.is_done() => Some(c.summarize(0)?),
                _ => None,
            };
            Ok(TrialRow {
                session_id: state.session_id.clone(),
                participant_id: state.participant_id.clone(),
                assigned_treatment: state.assigned_treatment.as_str().to_string(),
                status: format!("{:?}", state.status),
                exclusions: exclusions.join(";"),
                trial_id: d.trial_id.clone(),
                trial_index: d.index,
                kind: match d.kind {
                    TrialKind::LineCone => "line_cone",
                    TrialKind::Choice => "choice",
                    TrialKind::Update => "update",
                }
                .to_string(),
                pair_id: d.pair_id.clone(),
                round: d.round,
                treatment: d.treatment.map(|t| t.as_str().to_string()),
                congruence: d.congruence.map(|c| format!("{c:?}")),
                n: t.dataset.as_ref().map(|ds| ds.n()),
                rho_pop: t.dataset.as_ref().map(|ds| ds.rho_pop()),
                r_sample: t.dataset.as_ref().map(|ds| ds.r_sample()),
                pre_mu: t.prior.map(|r| r.mu),
                pre_b_lower: t.prior.map(|r| r.b_lower),
                pre_b_upper: t.prior.map(|r| r.b_upper),
                pre_ci_width: t.prior.map(|r| r.ci_width),
                post_mu: t.posterior.map(|r| r.mu),
                post_b_lower: t.posterior.map(|r| r.b_lower),
                post_b_upper: t.posterior.map(|r| r.b_upper),
                post_ci_width: t.posterior.map(|r| r.ci_width),
                view_duration_ms: t.view_duration_ms(),
                chain_mean: summary.map(|s| s.mean),
                chain_ci_lower: summary.map(|s| s.ci_lower),
                chain_ci_upper: summary.map(|s| s.ci_upper),
                chain_acceptance: t.chain.as_ref().and_then(|c| c.acceptance_rate()),
                mae_prior_only: score(Model::PriorOnly).map(|s| s.0),
                kld_prior_only: score(Model::PriorOnly).map(|s| s.1),
                mae_bayesian_informed: score(Model::BayesianInformed).map(|s| s.0),
                kld_bayesian_informed: score(Model::BayesianInformed).map(|s| s.1),
                mae_bayesian_uniform: score(Model::BayesianUniform).map(|s| s.0),
                kld_bayesian_uniform: score(Model::BayesianUniform).map(|s| s.1),
            })
        })
        .collect()
}

pub fn write_trials_csv(rows: &[TrialRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| SessionError::Storage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| SessionError::Storage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SessionError::Storage(e.to_string()))
}

pub fn read_trials_csv(text: &str) -> Result<Vec<TrialRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| SessionError::InvalidPayload(format!("trials csv: {e}")))
}

impl ExportBundle {
    pub fn states(&self) -> Result<Vec<SessionState>> {
        self.sessions_jsonl.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
    }

    pub fn rows(&self) -> Result<Vec<TrialRow>> {
        read_trials_csv(&self.trials_csv)
    }

    pub fn build(config: &StudyConfig, states: &[SessionState]) -> Result<Self> {
        let mut rows = Vec::new();
        let mut jsonl = String::new();
        for s in states {
            rows.extend(trial_rows(s)?);
            jsonl.push_str(&serde_json::to_string(s)?);
            jsonl.push('\n');
        }
        Ok(ExportBundle {
            study_id: config.study_id.clone(),
            config: config.clone(),
            sessions: states.len(),
            sealed: states.iter().all(|s| s.status == SessionStatus::Sealed),
            trials_csv: write_trials_csv(&rows)?,
            sessions_jsonl: jsonl,
        })
    }
}
