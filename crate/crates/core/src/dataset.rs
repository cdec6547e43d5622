//! Bivariate normal datasets with a target population correlation, and the
//! congruent/incongruent rule that derives that target from a prior.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sign, Real};

pub const MAX_ABS_RHO_POP: f64 = 0.99;
pub const DEFAULT_CLAMP: f64 = 0.95;
pub const CONGRUENT_OFFSET: f64 = 0.25;
pub const INCONGRUENT_OFFSET: f64 = 1.0;

/// Mean-centered points drawn from a standardized bivariate normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "DatasetWire<T>",
    into = "DatasetWire<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct CorrelationDataset<T> {
    points: Vec<[T; 2]>,
    rho_pop: T,
    r_sample: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetWire<T> {
    n: usize,
    rho_pop: T,
    r_sample: T,
    points: Vec<[T; 2]>,
}

impl<T: Real> TryFrom<DatasetWire<T>> for CorrelationDataset<T> {
    type Error = Error;

    fn try_from(w: DatasetWire<T>) -> Result<Self> {
        if w.n != w.points.len() {
            return Err(Error::InvalidDataset(format!("n={} but {} points", w.n, w.points.len())));
        }
        let ds = Self::from_points(w.points, w.rho_pop)?;
        if (ds.r_sample - w.r_sample).abs() > T::lit(1e-9) {
            return Err(Error::InvalidDataset(format!(
                "stored r_sample {} disagrees with points ({})",
                w.r_sample.as_f64(),
                ds.r_sample.as_f64()
            )));
        }
        Ok(ds)
    }
}

impl<T: Real> From<CorrelationDataset<T>> for DatasetWire<T> {
    fn from(d: CorrelationDataset<T>) -> Self {
        DatasetWire { n: d.points.len(), rho_pop: d.rho_pop, r_sample: d.r_sample, points: d.points }
    }
}

impl<T: Real> CorrelationDataset<T> {
    /// Wraps already-centered points. Rejects fewer than 3 points, uncentered
    /// data and constant coordinates.
    pub fn from_points(points: Vec<[T; 2]>, rho_pop: T) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidDataset(format!("need n >= 3, got {}", points.len())));
        }
        if !(rho_pop.abs() < T::one()) {
            return Err(Error::InvalidDataset(format!("rho_pop {} outside (-1, 1)", rho_pop.as_f64())));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite coordinate".into()));
        }
        let n = T::lit(points.len() as f64);
        let scale = points.iter().flatten().fold(T::one(), |m, v| m.max(v.abs()));
        let tol = T::lit(1e-9).max(T::lit(64.0) * T::epsilon()) * scale;
        for axis in 0..2 {
            let mean = points.iter().map(|p| p[axis]).fold(T::zero(), |a, b| a + b) / n;
            if mean.abs() > tol {
                return Err(Error::InvalidDataset(format!("axis {axis} not centered (mean {})", mean.as_f64())));
            }
        }
        let r_sample = pearson(&points)?;
        Ok(Self { points, rho_pop, r_sample })
    }

    pub fn points(&self) -> &[[T; 2]] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn rho_pop(&self) -> T {
        self.rho_pop
    }

    pub fn r_sample(&self) -> T {
        self.r_sample
    }

    /// Points z-scored per axis with the population (1/n) standard
    /// deviation, so that Σx² = Σy² = n.
    pub fn standardized(&self) -> Vec<[T; 2]> {
        let n = T::lit(self.points.len() as f64);
        let sd = |axis: usize| (self.points.iter().map(|p| p[axis] * p[axis]).fold(T::zero(), |a, b| a + b) / n).sqrt();
        let (sx, sy) = (sd(0), sd(1));
        self.points.iter().map(|p| [p[0] / sx, p[1] / sy]).collect()
    }

    /// CSV with header `x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.points {
            writeln!(out, "{},{}", p[0], p[1]).expect("writing to a String");
        }
        out
    }
}

/// Draws `n` points from a standardized bivariate normal with correlation
/// `rho_pop` (`y = ρx + √(1−ρ²)z`), then centers each coordinate.
pub fn generate<T: Real>(rho_pop: T, n: usize, seed: u64) -> Result<CorrelationDataset<T>> {
    if !(rho_pop.abs() <= T::lit(MAX_ABS_RHO_POP)) {
        return Err(Error::InvalidDataset(format!("|rho_pop| must be <= {MAX_ABS_RHO_POP}, got {}", rho_pop.as_f64())));
    }
    if n < 3 {
        return Err(Error::InvalidDataset(format!("need n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail = (T::one() - rho_pop * rho_pop).sqrt();
    let mut points: Vec<[T; 2]> = (0..n)
        .map(|_| {
            let x = T::lit(rng.sample::<f64, _>(StandardNormal));
            let z = T::lit(rng.sample::<f64, _>(StandardNormal));
            [x, rho_pop * x + tail * z]
        })
        .collect();
    center(&mut points);
    let r_sample = pearson(&points)?;
    Ok(CorrelationDataset { points, rho_pop, r_sample })
}

fn center<T: Real>(points: &mut [[T; 2]]) {
    let n = T::lit(points.len() as f64);
    for axis in 0..2 {
        let mean = points.iter().map(|p| p[axis]).fold(T::zero(), |a, b| a + b) / n;
        for p in points.iter_mut() {
            p[axis] = p[axis] - mean;
        }
    }
}

/// Pearson correlation of a point set.
pub fn pearson<T: Real>(points: &[[T; 2]]) -> Result<T> {
    let n = T::lit(points.len() as f64);
    let mx = points.iter().map(|p| p[0]).fold(T::zero(), |a, b| a + b) / n;
    let my = points.iter().map(|p| p[1]).fold(T::zero(), |a, b| a + b) / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if !(sxx > T::zero() && syy > T::zero()) {
        return Err(Error::InvalidDataset("a coordinate has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Congruence {
    Congruent,
    Incongruent,
}

impl Congruence {
    pub fn offset(self) -> f64 {
        match self {
            Congruence::Congruent => CONGRUENT_OFFSET,
            Congruence::Incongruent => INCONGRUENT_OFFSET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongruenceSpec<T> {
    pub kind: Congruence,
    pub offset: T,
    pub prior_mu: T,
    pub resolved_rho: T,
}

/// Population correlation for a dataset that agrees (shifted 0.25 toward
/// zero) or disagrees (shifted 1.0 across zero) with `prior_mu`, clamped to
/// `[-clamp, clamp]`. A zero prior has no sign: congruent resolves to zero and
/// incongruent picks a side from `seed`.
pub fn resolve_congruence<T: Real>(prior_mu: T, kind: Congruence, clamp: T, seed: u64) -> Result<CongruenceSpec<T>> {
    if !(prior_mu >= -T::one() && prior_mu <= T::one()) {
        return Err(Error::OutOfRange(prior_mu.as_f64()));
    }
    if !(clamp > T::zero() && clamp <= T::lit(MAX_ABS_RHO_POP)) {
        return Err(Error::Invalid(format!("clamp must lie in (0, {MAX_ABS_RHO_POP}]")));
    }
    let offset = T::lit(kind.offset());
    let direction = if prior_mu == T::zero() {
        match kind {
            Congruence::Congruent => T::zero(),
            Congruence::Incongruent => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                if rng.random::<bool>() { T::one() } else { -T::one() }
            }
        }
    } else {
        // subtracting sign(prior)·offset moves toward (and maybe past) zero
        -sign(prior_mu)
    };
    let resolved_rho = (prior_mu + direction * offset).max(-clamp).min(clamp);
    Ok(CongruenceSpec { kind, offset, prior_mu, resolved_rho })
}
