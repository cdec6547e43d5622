//! The append-only session log. Events carry everything derived at the time
//! (datasets, overlays, fit scores) so replay never recomputes.

use std::collections::BTreeSet;

use corrbelief::mcmcp::Side;
use corrbelief::{CorrelationDataset, ElicitationRecord, FitScore};
use serde::{Deserialize, Serialize};

use crate::config::Treatment;
use crate::exclusion::ExclusionFlag;
use crate::overlay::Overlay;
use crate::plan::TrialDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        participant_id: String,
        study_id: String,
        treatment: Treatment,
        assignment_index: u64,
        seed: u64,
        mcmcp_trials: usize,
        plan: Vec<TrialDescriptor>,
    },
    PriorSubmitted {
        trial_id: String,
        record: ElicitationRecord,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset: Option<CorrelationDataset>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        overlay: Option<Overlay>,
    },
    ViewAcknowledged {
        trial_id: String,
    },
    PosteriorSubmitted {
        trial_id: String,
        record: ElicitationRecord,
    },
    ChoiceRecorded {
        trial_id: String,
        trial_index: usize,
        side: Side,
        duration_ms: u64,
    },
    AttentionAnswered {
        item_id: String,
        answer: String,
    },
    Sealed {
        scores: Vec<FitScore>,
        exclusions: BTreeSet<ExclusionFlag>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// 1-based position in the session's log.
    pub seq: u64,
    pub at_ms: u64,
    #[serde(flatten)]
    pub event: SessionEvent,
}
