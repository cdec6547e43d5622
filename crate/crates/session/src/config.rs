//! Study configuration, as loaded from JSON.

use std::collections::HashSet;

use corrbelief::dataset::MAX_ABS_RHO_POP;
use corrbelief::mcmcp::{InvalidResponseRules, DEFAULT_TARGET_TRIALS};
use corrbelief::McmcConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SessionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StudyKind {
    /// Line+Cone and MCMC-P elicitation of the same pairs, no data shown.
    ElicitationComparison,
    /// Every participant sees the same dataset per pair.
    FixedDatasets,
    /// Datasets are generated from each participant's prior.
    CongruenceManipulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Treatment {
    Scatter,
    Line,
    Cone,
    #[serde(rename = "HOP")]
    Hop,
}

impl Treatment {
    pub fn as_str(self) -> &'static str {
        match self {
            Treatment::Scatter => "Scatter",
            Treatment::Line => "Line",
            Treatment::Cone => "Cone",
            Treatment::Hop => "HOP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariablePair {
    pub id: String,
    pub label_x: String,
    pub label_y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_pop: Option<f64>,
}

/// One round of trials. `treatment: None` means the participant's assigned treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSpec {
    pub pairs: Vec<String>,
    #[serde(default)]
    pub treatment: Option<Treatment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionCheck {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study_id: String,
    pub study_kind: StudyKind,
    pub variable_pairs: Vec<VariablePair>,
    pub treatments: Vec<Treatment>,
    /// Empty means a single round over all pairs with the assigned treatment.
    #[serde(default)]
    pub rounds: Vec<RoundSpec>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub attention_checks: Vec<AttentionCheck>,
    #[serde(default = "default_mcmcp_trials")]
    pub mcmcp_trials: usize,
    #[serde(default)]
    pub mcmcp_rules: InvalidResponseRules,
    #[serde(default = "default_min_duration")]
    pub min_duration_secs: u64,
    #[serde(default = "default_hop_draws")]
    pub hop_draws: usize,
    /// Sampler settings for the overlays and the sealed-session model fits.
    #[serde(default)]
    pub mcmc: McmcConfig,
}

fn default_mcmcp_trials() -> usize {
    DEFAULT_TARGET_TRIALS
}

fn default_min_duration() -> u64 {
    300
}

fn default_hop_draws() -> usize {
    50
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: StudyConfig = serde_json::from_str(text).map_err(|e| SessionError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn pair(&self, id: &str) -> Option<&VariablePair> {
        self.variable_pairs.iter().find(|p| p.id == id)
    }

    /// Sample sizes in effect: explicit, or 100 (fixed) / {10, 100} (congruence).
    pub fn effective_sample_sizes(&self) -> Vec<usize> {
        match (self.sample_sizes.is_empty(), self.study_kind) {
            (false, _) => self.sample_sizes.clone(),
            (true, StudyKind::CongruenceManipulated) => vec![10, 100],
            (true, _) => vec![100],
        }
    }

    /// Rounds in effect, filling in the single-round default.
    pub fn effective_rounds(&self) -> Vec<RoundSpec> {
        if self.rounds.is_empty() {
            vec![RoundSpec { pairs: self.variable_pairs.iter().map(|p| p.id.clone()).collect(), treatment: None }]
        } else {
            self.rounds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SessionError::Config(m));
        if self.study_id.is_empty() {
            return bad("study_id is empty".into());
        }
        if self.variable_pairs.is_empty() {
            return bad("no variable pairs".into());
        }
        let mut ids = HashSet::new();
        for p in &self.variable_pairs {
            if !ids.insert(p.id.as_str()) {
                return bad(format!("duplicate pair id `{}`", p.id));
            }
        }
        if self.treatments.is_empty() {
            return bad("treatments must be nonempty".into());
        }
        if self.treatments.iter().collect::<HashSet<_>>().len() != self.treatments.len() {
            return bad("duplicate treatment".into());
        }
        if self.effective_sample_sizes().iter().any(|&n| n < 3) {
            return bad("sample sizes must be at least 3".into());
        }
        if self.mcmc.chains == 0 || self.mcmc.samples_per_chain == 0 {
            return bad("mcmc needs at least one chain and one kept sample".into());
        }
        match self.study_kind {
            StudyKind::ElicitationComparison => {
                if self.mcmcp_trials == 0 {
                    return bad("mcmcp_trials must be positive".into());
                }
            }
            StudyKind::FixedDatasets => {
                for p in &self.variable_pairs {
                    match p.rho_pop {
                        Some(r) if r.abs() <= MAX_ABS_RHO_POP => {}
                        Some(r) => return bad(format!("pair `{}`: rho_pop {r} outside ±{MAX_ABS_RHO_POP}", p.id)),
                        None => return bad(format!("pair `{}` needs rho_pop", p.id)),
                    }
                }
                if self.effective_sample_sizes().len() != 1 {
                    return bad("fixed datasets use exactly one sample size".into());
                }
                let rounds = self.effective_rounds();
                if rounds.len() > 1 && rounds[0].treatment != Some(Treatment::Scatter) {
                    return bad("round 1 must show scatterplots to everyone".into());
                }
            }
            StudyKind::CongruenceManipulated => {
                if let Some(p) = self.variable_pairs.iter().find(|p| p.rho_pop.is_some()) {
                    return bad(format!("pair `{}`: rho_pop is resolved per participant here", p.id));
                }
            }
        }
        let mut seen = HashSet::new();
        for round in self.effective_rounds() {
            if round.pairs.is_empty() {
                return bad("empty round".into());
            }
            for id in &round.pairs {
                if !ids.contains(id.as_str()) {
                    return bad(format!("round names unknown pair `{id}`"));
                }
                if !seen.insert(id.clone()) {
                    return bad(format!("pair `{id}` appears in two rounds"));
                }
            }
        }
        Ok(())
    }
}
