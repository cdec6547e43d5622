//! Treatment-specific parameters drawn over the scatterplot.

use corrbelief::bayes::{posterior, PriorSpec};
use corrbelief::{CorrelationDataset, McmcConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Treatment;
use crate::error::Result;

/// Scatter and Line carry no uncertainty; Cone and HOP show the Uniform-model
/// 95% interval, HOP additionally as a fixed list of animation frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Overlay {
    Scatter,
    Line { mean: f64 },
    Cone { mean: f64, ci_lower: f64, ci_upper: f64 },
    #[serde(rename = "HOP")]
    Hop { mean: f64, ci_lower: f64, ci_upper: f64, hop_draws: Vec<f64> },
}

impl Overlay {
    pub fn build(
        treatment: Treatment,
        dataset: &CorrelationDataset,
        mcmc: &McmcConfig,
        hop_draws: usize,
        seed: u64,
    ) -> Result<Overlay> {
        if treatment == Treatment::Scatter {
            return Ok(Overlay::Scatter);
        }
        let post = posterior(dataset, &PriorSpec::Uniform, mcmc, seed)?;
        let (mean, ci_lower, ci_upper) = (post.mean, post.ci[0], post.ci[1]);
        Ok(match treatment {
            Treatment::Scatter => unreachable!(),
            Treatment::Line => Overlay::Line { mean },
            Treatment::Cone => Overlay::Cone { mean, ci_lower, ci_upper },
            Treatment::Hop => {
                let inside: Vec<f64> =
                    post.samples.iter().copied().filter(|s| (ci_lower..=ci_upper).contains(s)).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4f50);
                let draws = (0..hop_draws).map(|_| inside[rng.random_range(0..inside.len())]).collect();
                Overlay::Hop { mean, ci_lower, ci_upper, hop_draws: draws }
            }
        })
    }

    pub fn mean(&self) -> Option<f64> {
        match *self {
            Overlay::Scatter => None,
            Overlay::Line { mean } | Overlay::Cone { mean, .. } | Overlay::Hop { mean, .. } => Some(mean),
        }
    }

    pub fn shows_uncertainty(&self) -> bool {
        matches!(self, Overlay::Cone { .. } | Overlay::Hop { .. })
    }
}
