//! Model-fit metrics: absolute error of means and KL divergence between
//! belief densities on a shared grid.

use serde::{Deserialize, Serialize};

use crate::bayes::{Model, PosteriorResult};
use crate::belief::ElicitationRecord;
use crate::error::{Error, Result};
use crate::grid::RhoGrid;
use crate::scalar::Real;

/// Added to every grid density before KLD to keep logs finite.
pub const KLD_EPSILON: f64 = 1e-9;

/// KLD is computed as KL(elicited ‖ predicted).
pub const KL_DIRECTION: &str = "KL(elicited || predicted)";

pub fn mae<T: Real>(predicted_mean: T, elicited_mean: T) -> Result<T> {
    for v in [predicted_mean, elicited_mean] {
        if !(v >= -T::one() && v <= T::one()) {
            return Err(Error::OutOfRange(v.as_f64()));
        }
    }
    Ok((predicted_mean - elicited_mean).abs())
}

/// Trapezoid-weighted `Σ p log(p / q)` after epsilon smoothing, in nats.
pub fn kld<T: Real>(elicited: &RhoGrid<T>, predicted: &RhoGrid<T>) -> Result<T> {
    if !elicited.same_support(predicted) {
        return Err(Error::GridMismatch);
    }
    let eps = T::lit(KLD_EPSILON);
    let p = elicited.smoothed(eps);
    let q = predicted.smoothed(eps);
    let total = p
        .weights()
        .iter()
        .zip(p.densities().iter().zip(q.densities()))
        .fold(T::zero(), |acc, (&w, (&pi, &qi))| acc + w * pi * (pi / qi).ln());
    // exact zero for identical inputs; rounding can dip a hair below it
    Ok(total.max(T::zero()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitScore {
    pub trial_id: String,
    pub model: Model,
    pub mae: f64,
    pub kld: f64,
}

/// Which way round KL is taken when scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KlDirection {
    #[default]
    ElicitedPredicted,
    PredictedElicited,
}

/// Scores one elicited posterior against each model's prediction.
pub fn score_trial(
    trial_id: &str,
    elicited: &ElicitationRecord<f64>,
    predictions: &[PosteriorResult<f64>],
) -> Result<Vec<FitScore>> {
    score_trial_with(trial_id, elicited, predictions, KlDirection::default())
}

pub fn score_trial_with(
    trial_id: &str,
    elicited: &ElicitationRecord<f64>,
    predictions: &[PosteriorResult<f64>],
    direction: KlDirection,
) -> Result<Vec<FitScore>> {
    predictions
        .iter()
        .map(|pred| {
            let belief = elicited.fitted;
            let elicited_grid = RhoGrid::from_parts(
                pred.grid.points().to_vec(),
                pred.grid.points().iter().map(|&x| belief.pdf(x)).collect(),
            )?;
            let kld = match direction {
                KlDirection::ElicitedPredicted => kld(&elicited_grid, &pred.grid)?,
                KlDirection::PredictedElicited => kld(&pred.grid, &elicited_grid)?,
            };
            Ok(FitScore { trial_id: trial_id.to_owned(), model: pred.model, mae: mae(pred.mean, elicited.mu)?, kld })
        })
        .collect()
}
