//! Shared discretization of ρ used by the grid posterior and by KLD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const GRID_SIZE: usize = 201;

/// Grid endpoints stop short of ±1, where the bivariate-normal likelihood
/// diverges.
pub const GRID_EDGE: f64 = 0.999;

/// Densities over an evenly spaced, symmetric set of ρ values, normalized
/// to unit trapezoid integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "GridParts<T>",
    into = "GridParts<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct RhoGrid<T> {
    points: Vec<T>,
    densities: Vec<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridParts<T> {
    points: Vec<T>,
    densities: Vec<T>,
}

impl<T: Real> TryFrom<GridParts<T>> for RhoGrid<T> {
    type Error = Error;

    fn try_from(p: GridParts<T>) -> Result<Self> {
        Self::from_parts(p.points, p.densities)
    }
}

impl<T: Real> From<RhoGrid<T>> for GridParts<T> {
    fn from(g: RhoGrid<T>) -> Self {
        GridParts { points: g.points, densities: g.densities }
    }
}

/// `size` evenly spaced points on `[-GRID_EDGE, GRID_EDGE]`, mirrored so the
/// set is exactly symmetric about zero.
pub fn support<T: Real>(size: usize) -> Vec<T> {
    assert!(size >= 3, "grid needs at least three points");
    let edge = T::lit(GRID_EDGE);
    let step = T::lit(2.0) * edge / T::lit((size - 1) as f64);
    let mut points: Vec<T> = (0..size).map(|i| -edge + T::lit(i as f64) * step).collect();
    for i in 0..size / 2 {
        points[size - 1 - i] = -points[i];
    }
    if size % 2 == 1 {
        points[size / 2] = T::zero();
    }
    points
}

impl<T: Real> RhoGrid<T> {
    /// Builds a grid from densities evaluated at `points`, normalizing them.
    pub fn from_parts(points: Vec<T>, densities: Vec<T>) -> Result<Self> {
        if points.len() < 3 || points.len() != densities.len() {
            return Err(Error::Invalid(format!(
                "grid needs >= 3 points and one density per point (got {} and {})",
                points.len(),
                densities.len()
            )));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("grid points must be strictly increasing".into()));
        }
        if densities.iter().any(|d| !d.is_finite() || *d < T::zero()) {
            return Err(Error::Invalid("grid densities must be finite and nonnegative".into()));
        }
        let mut grid = Self { points, densities };
        grid.normalize()?;
        Ok(grid)
    }

    pub fn from_density(size: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let points = support(size);
        let densities = points.iter().map(|&x| f(x)).collect();
        Self::from_parts(points, densities)
    }

    /// Builds a grid from an unnormalized log density; the maximum is
    /// subtracted before exponentiating.
    pub fn from_log_density(size: usize, ln_f: impl Fn(T) -> T) -> Result<Self> {
        let points: Vec<T> = support(size);
        let logs: Vec<T> = points.iter().map(|&x| ln_f(x)).collect();
        let max = logs.iter().copied().fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            return Err(Error::Invalid("log density is -inf (or NaN) everywhere on the grid".into()));
        }
        let densities = logs.iter().map(|&l| (l - max).exp()).collect();
        Self::from_parts(points, densities)
    }

    fn normalize(&mut self) -> Result<()> {
        let total = trapezoid(&self.points, &self.densities);
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::Invalid("grid density has zero mass".into()));
        }
        for d in &mut self.densities {
            *d = *d / total;
        }
        Ok(())
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn densities(&self) -> &[T] {
        &self.densities
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn same_support(&self, other: &Self) -> bool {
        self.points == other.points
    }

    /// Trapezoid rule quadrature weights for the grid points.
    pub fn weights(&self) -> Vec<T> {
        trapezoid_weights(&self.points)
    }

    pub fn integral(&self) -> T {
        trapezoid(&self.points, &self.densities)
    }

    /// Trapezoid expectation of `g(ρ)`.
    pub fn expect(&self, g: impl Fn(T) -> T) -> T {
        let vals: Vec<T> = self.points.iter().zip(&self.densities).map(|(&x, &d)| g(x) * d).collect();
        trapezoid(&self.points, &vals)
    }

    pub fn mean(&self) -> T {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// Point with the highest density.
    pub fn mode(&self) -> T {
        let mut best = 0;
        for (i, d) in self.densities.iter().enumerate() {
            if *d > self.densities[best] {
                best = i;
            }
        }
        self.points[best]
    }

    /// Cumulative trapezoid mass at each point.
    pub fn cumulative(&self) -> Vec<T> {
        let mut cum = Vec::with_capacity(self.len());
        let mut acc = T::zero();
        cum.push(acc);
        for i in 1..self.len() {
            let h = self.points[i] - self.points[i - 1];
            acc = acc + h * (self.densities[i] + self.densities[i - 1]) / T::lit(2.0);
            cum.push(acc);
        }
        cum
    }

    /// Inverse of the cumulative mass, linear between grid points.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::InvalidProbability(p.as_f64()));
        }
        let cum = self.cumulative();
        let idx = cum.partition_point(|&c| c < p);
        if idx == 0 {
            return Ok(self.points[0]);
        }
        if idx >= cum.len() {
            return Ok(self.points[self.len() - 1]);
        }
        let (c0, c1) = (cum[idx - 1], cum[idx]);
        let (x0, x1) = (self.points[idx - 1], self.points[idx]);
        if c1 <= c0 {
            return Ok(x0);
        }
        Ok(x0 + (x1 - x0) * (p - c0) / (c1 - c0))
    }

    pub fn central_interval(&self, level: T) -> Result<(T, T)> {
        let tail = (T::one() - level) / T::lit(2.0);
        Ok((self.quantile(tail)?, self.quantile(T::one() - tail)?))
    }

    /// Adds `eps` to every density and renormalizes.
    pub fn smoothed(&self, eps: T) -> Self {
        let mut out = self.clone();
        for d in &mut out.densities {
            *d = *d + eps;
        }
        out.normalize().expect("smoothing keeps positive mass");
        out
    }
}

pub(crate) fn trapezoid_weights<T: Real>(points: &[T]) -> Vec<T> {
    let n = points.len();
    let mut w = vec![T::zero(); n];
    for i in 1..n {
        let half = (points[i] - points[i - 1]) / T::lit(2.0);
        w[i - 1] = w[i - 1] + half;
        w[i] = w[i] + half;
    }
    w
}

pub(crate) fn trapezoid<T: Real>(points: &[T], values: &[T]) -> T {
    points
        .windows(2)
        .zip(values.windows(2))
        .fold(T::zero(), |acc, (x, y)| acc + (x[1] - x[0]) * (y[0] + y[1]) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    type BoundedNormal = crate::belief::BoundedNormal<f64>;
    type RhoGrid = super::RhoGrid<f64>;

    #[test]
    fn support_is_symmetric_and_increasing() {
        let pts = support::<f64>(GRID_SIZE);
        assert_eq!(pts.len(), 201);
        assert_eq!(pts[0], -GRID_EDGE);
        assert_eq!(pts[200], GRID_EDGE);
        assert_eq!(pts[100], 0.0);
        for i in 0..pts.len() {
            assert_eq!(pts[i], -pts[pts.len() - 1 - i]);
        }
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn normalized_after_construction() {
        let b = BoundedNormal::new(0.3, 0.2).unwrap();
        let g = RhoGrid::from_density(GRID_SIZE, |x| b.pdf(x)).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-12);
        assert!((g.mean() - b.mean()).abs() < 1e-3);
        let (lo, hi) = g.central_interval(0.95).unwrap();
        let (blo, bhi) = b.central_interval(0.95).unwrap();
        assert!((lo - blo).abs() < 0.01 && (hi - bhi).abs() < 0.01);
    }

    #[test]
    fn log_density_survives_underflow() {
        let g = RhoGrid::from_log_density(GRID_SIZE, |x| -1e6 * (x - 0.5).powi(2) - 5000.0).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-12);
        assert!((g.mode() - 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(RhoGrid::from_parts(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(RhoGrid::from_parts(vec![0.0, 0.5, 0.4], vec![1.0, 1.0, 1.0]).is_err());
        assert!(RhoGrid::from_parts(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 0.0]).is_err());
        assert!(RhoGrid::from_parts(vec![0.0, 0.5, 1.0], vec![1.0, -1.0, 1.0]).is_err());
        assert!(RhoGrid::from_log_density(11, |_| f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn serde_validates() {
        let g = RhoGrid::from_density(11, |_| 1.0).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: RhoGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<RhoGrid>(r#"{"points":[0,1],"densities":[1,1]}"#).is_err());
    }
}
