//! Exclusion bookkeeping for invalid or inattentive sessions.

use std::collections::BTreeSet;

use corrbelief::mcmcp::detect_invalid;
use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;
use crate::state::SessionState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExclusionFlag {
    FailedAttentionCheck,
    /// Total duration under the study minimum (five minutes by default).
    TooFast,
    /// A forced-choice block tripped a streak, alternation or response-time rule.
    McmcpInvalid,
    IncompleteTrials,
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Flags for `state` under `config`. Duration is only judged on sealed sessions;
/// an unsealed one is `IncompleteTrials` regardless of how long it has run.
pub fn evaluate(state: &SessionState, config: &StudyConfig, now_ms: Option<u64>) -> BTreeSet<ExclusionFlag> {
    let mut flags = BTreeSet::new();
    let failed = config.attention_checks.iter().any(|item| {
        state.attention.get(&item.id).is_none_or(|given| normalize(given) != normalize(&item.answer))
    });
    if failed {
        flags.insert(ExclusionFlag::FailedAttentionCheck);
    }
    if !state.all_trials_complete() {
        flags.insert(ExclusionFlag::IncompleteTrials);
    } else if let Some(end) = state.sealed_at_ms.or(now_ms) {
        if end.saturating_sub(state.created_at_ms) < config.min_duration_secs * 1000 {
            flags.insert(ExclusionFlag::TooFast);
        }
    }
    if state
        .trials
        .iter()
        .any(|t| !t.responses.is_empty() && !detect_invalid(&t.responses, &config.mcmcp_rules).is_empty())
    {
        flags.insert(ExclusionFlag::McmcpInvalid);
    }
    flags
}
