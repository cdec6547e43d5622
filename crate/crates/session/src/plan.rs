//! Per-participant trial plans and balanced treatment assignment.

use corrbelief::dataset::Congruence;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{StudyConfig, StudyKind, Treatment};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    /// A single Line+Cone elicitation with no data shown.
    LineCone,
    /// A block of MCMC-P forced choices.
    Choice,
    /// Prior elicitation, data visualization, posterior elicitation.
    Update,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub trial_id: String,
    pub index: usize,
    pub pair_id: String,
    pub kind: TrialKind,
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment: Option<Treatment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Known up front only for fixed datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_pop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub congruence: Option<Congruence>,
    /// Drives dataset generation, chain proposals, overlays and model fits.
    pub seed: u64,
}

/// Treatment for the `index`-th session of a study: permuted blocks of size k,
/// each block shuffled with its own seed, so counts never differ by more than one
/// within a block.
pub fn assign_treatment(treatments: &[Treatment], study_seed: u64, index: u64) -> Treatment {
    let k = treatments.len() as u64;
    let mut block = treatments.to_vec();
    block.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(study_seed, index / k)));
    block[(index % k) as usize]
}

/// Materializes the ordered trial list for one participant.
pub fn build_plan(config: &StudyConfig, assigned: Treatment, session_seed: u64) -> Vec<TrialDescriptor> {
    let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
    let sizes = config.effective_sample_sizes();
    let mut plan = Vec::new();
    let push = |plan: &mut Vec<TrialDescriptor>, pair_id: &str, kind, round, f: &dyn Fn(&mut TrialDescriptor)| {
        let index = plan.len();
        let mut d = TrialDescriptor {
            trial_id: format!("t{index:02}"),
            index,
            pair_id: pair_id.to_string(),
            kind,
            round,
            treatment: None,
            n: None,
            rho_pop: None,
            congruence: None,
            seed: mix(session_seed, index as u64),
        };
        f(&mut d);
        plan.push(d);
    };
    match config.study_kind {
        StudyKind::ElicitationComparison => {
            let mut blocks = [TrialKind::LineCone, TrialKind::Choice];
            blocks.shuffle(&mut rng);
            for (round, kind) in blocks.into_iter().enumerate() {
                let mut pairs: Vec<&str> = config.variable_pairs.iter().map(|p| p.id.as_str()).collect();
                pairs.shuffle(&mut rng);
                for id in pairs {
                    push(&mut plan, id, kind, round, &|_| {});
                }
            }
        }
        StudyKind::FixedDatasets => {
            for (round, spec) in config.effective_rounds().into_iter().enumerate() {
                let mut pairs = spec.pairs.clone();
                pairs.shuffle(&mut rng);
                for id in pairs {
                    let pair_index = config.variable_pairs.iter().position(|p| p.id == id).unwrap_or(0);
                    let rho = config.variable_pairs[pair_index].rho_pop;
                    let treatment = spec.treatment.unwrap_or(assigned);
                    // Same data for every participant: seeded by study and pair only.
                    let seed = mix(config.seed, pair_index as u64);
                    push(&mut plan, &id, TrialKind::Update, round, &|d| {
                        d.treatment = Some(treatment);
                        d.n = Some(sizes[0]);
                        d.rho_pop = rho;
                        d.seed = seed;
                    });
                }
            }
        }
        StudyKind::CongruenceManipulated => {
            let total: usize = config.effective_rounds().iter().map(|r| r.pairs.len()).sum();
            let cells: Vec<(Congruence, usize)> = [Congruence::Congruent, Congruence::Incongruent]
                .into_iter()
                .flat_map(|c| sizes.iter().map(move |&n| (c, n)))
                .collect();
            let mut assigned_cells: Vec<_> = cells.iter().copied().cycle().take(total).collect();
            assigned_cells.shuffle(&mut rng);
            let mut cell_iter = assigned_cells.into_iter();
            for (round, spec) in config.effective_rounds().into_iter().enumerate() {
                let mut pairs = spec.pairs.clone();
                pairs.shuffle(&mut rng);
                for id in pairs {
                    let (congruence, n) = cell_iter.next().expect("one cell per pair");
                    let treatment = spec.treatment.unwrap_or(assigned);
                    push(&mut plan, &id, TrialKind::Update, round, &|d| {
                        d.treatment = Some(treatment);
                        d.n = Some(n);
                        d.congruence = Some(congruence);
                    });
                }
            }
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn blocks_are_balanced() {
        let ts = [Treatment::Line, Treatment::Cone, Treatment::Hop];
        for block in 0..50u64 {
            let mut counts = HashMap::new();
            for i in 0..3 {
                *counts.entry(assign_treatment(&ts, 9, block * 3 + i)).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), 3);
        }
    }
}
