//! JSON shapes returned to clients. None of them carries a dataset, its
//! population correlation or its congruence before the prior is in.

use corrbelief::mcmcp::TrialView;
use serde::{Deserialize, Serialize};

use crate::config::{Treatment, VariablePair};
use crate::overlay::Overlay;
use crate::plan::TrialKind;
use crate::state::{SessionState, SessionStatus, Stage, TrialState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLabel {
    pub id: String,
    pub label_x: String,
    pub label_y: String,
}

impl From<&VariablePair> for PairLabel {
    fn from(p: &VariablePair) -> Self {
        PairLabel { id: p.id.clone(), label_x: p.label_x.clone(), label_y: p.label_y.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetView {
    pub trial_id: String,
    pub treatment: Treatment,
    pub n: usize,
    pub points: Vec<[f64; 2]>,
    pub overlay: Overlay,
}

impl DatasetView {
    pub(crate) fn of(trial: &TrialState) -> Option<DatasetView> {
        let dataset = trial.dataset.as_ref()?;
        Some(DatasetView {
            trial_id: trial.descriptor.trial_id.clone(),
            treatment: trial.descriptor.treatment?,
            n: dataset.n(),
            points: dataset.points().to_vec(),
            overlay: trial.overlay.clone()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPrompt {
    pub trial_id: String,
    pub index: usize,
    pub kind: TrialKind,
    pub stage: Stage,
    pub pair: PairLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment: Option<Treatment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<TrialView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub session_id: String,
    pub status: SessionStatus,
    pub cursor: usize,
    pub total_trials: usize,
}

impl From<&SessionState> for Progress {
    fn from(s: &SessionState) -> Self {
        Progress { session_id: s.session_id.clone(), status: s.status, cursor: s.cursor, total_trials: s.trials.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentTrial {
    #[serde(flatten)]
    pub progress: Progress,
    pub participant_id: String,
    pub treatment: Treatment,
    pub trial: Option<TrialPrompt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorOutcome {
    #[serde(flatten)]
    pub progress: Progress,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceOutcome {
    #[serde(flatten)]
    pub progress: Progress,
    /// The next pair of options, absent once the block is finished.
    pub next: Option<TrialView>,
}
