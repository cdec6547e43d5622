//! Beliefs about a correlation coefficient.
//!
//! A belief is a normal distribution over ρ truncated to `[-1, 1]`. The same
//! type describes elicited priors and posteriors, the Bayesian-Informed prior
//! and the simulated participants' internal state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{std_normal_mass, std_normal_pdf, Real};

/// Floor on the scale of any fitted belief.
pub const SIGMA_MIN: f64 = 0.01;

/// Normal quantile used to read cone bounds as a central 95% interval.
pub const Z_95: f64 = 1.96;

const QUANTILE_TOL: f64 = 1e-12;

/// Normal(mu, sigma) truncated to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "BeliefParams<T>",
    into = "BeliefParams<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct BoundedNormal<T> {
    mu: T,
    sigma: T,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct BeliefParams<T> {
    mu: T,
    sigma: T,
}

impl<T: Real> TryFrom<BeliefParams<T>> for BoundedNormal<T> {
    type Error = Error;

    fn try_from(p: BeliefParams<T>) -> Result<Self> {
        Self::new(p.mu, p.sigma)
    }
}

impl<T: Real> From<BoundedNormal<T>> for BeliefParams<T> {
    fn from(b: BoundedNormal<T>) -> Self {
        BeliefParams { mu: b.mu, sigma: b.sigma }
    }
}

impl<T: Real> BoundedNormal<T> {
    pub fn new(mu: T, sigma: T) -> Result<Self> {
        let valid = mu.is_finite()
            && mu >= -T::one()
            && mu <= T::one()
            && sigma.is_finite()
            && sigma > T::zero();
        if !valid {
            return Err(Error::InvalidBelief { mu: mu.as_f64(), sigma: sigma.as_f64() });
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn lower(&self) -> T {
        -T::one()
    }

    pub fn upper(&self) -> T {
        T::one()
    }

    fn standardize(&self, x: T) -> T {
        (x - self.mu) / self.sigma
    }

    /// Normal probability mass inside `[-1, 1]`.
    pub fn mass(&self) -> T {
        std_normal_mass(self.standardize(-T::one()), self.standardize(T::one()))
    }

    pub fn pdf(&self, rho: T) -> T {
        if rho < -T::one() || rho > T::one() {
            return T::zero();
        }
        std_normal_pdf(self.standardize(rho)) / (self.sigma * self.mass())
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, rho: T) -> T {
        if rho < -T::one() || rho > T::one() {
            return T::neg_infinity();
        }
        let z = self.standardize(rho);
        let half_ln_2pi = T::lit(0.918_938_533_204_672_8);
        -(z * z) / T::lit(2.0) - half_ln_2pi - (self.sigma * self.mass()).ln()
    }

    pub fn cdf(&self, rho: T) -> T {
        if rho <= -T::one() {
            return T::zero();
        }
        if rho >= T::one() {
            return T::one();
        }
        let a = self.standardize(-T::one());
        let inside = std_normal_mass(a, self.standardize(rho)) / self.mass();
        inside.min(T::one())
    }

    /// Inverse CDF by bisection on `[-1, 1]`.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::InvalidProbability(p.as_f64()));
        }
        let tol = T::lit(QUANTILE_TOL).max(T::resolution());
        let (mut lo, mut hi) = (-T::one(), T::one());
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = (lo + hi) / T::lit(2.0);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) / T::lit(2.0))
    }

    /// Equal-tailed interval holding `level` of the mass.
    pub fn central_interval(&self, level: T) -> Result<(T, T)> {
        let tail = (T::one() - level) / T::lit(2.0);
        Ok((self.quantile(tail)?, self.quantile(T::one() - tail)?))
    }

    pub fn mean(&self) -> T {
        let a = self.standardize(-T::one());
        let b = self.standardize(T::one());
        let shift = (std_normal_pdf(a) - std_normal_pdf(b)) / self.mass();
        (self.mu + self.sigma * shift).max(-T::one()).min(T::one())
    }

    pub fn variance(&self) -> T {
        let a = self.standardize(-T::one());
        let b = self.standardize(T::one());
        let z = self.mass();
        let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
        // a·φ(a) → 0 in the far tails; guard the 0·inf case
        let edge = |x: T, px: T| if px == T::zero() { T::zero() } else { x * px };
        let shift = (pa - pb) / z;
        let spread = T::one() + (edge(a, pa) - edge(b, pb)) / z - shift * shift;
        self.sigma * self.sigma * spread.max(T::zero())
    }

    /// One exact draw by rejection. Concentrated beliefs propose from the
    /// untruncated normal; wide ones propose uniformly on `[-1, 1]` under the
    /// envelope `exp(0)` at `mu`. Either way acceptance stays above ~0.3.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        if self.mass() >= T::lit(0.3) {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let x = self.mu + self.sigma * T::lit(z);
                if x >= -T::one() && x <= T::one() {
                    return x;
                }
            }
        }
        loop {
            let x = T::lit(rng.random_range(-1.0..=1.0));
            let z = self.standardize(x);
            let u: f64 = rng.random();
            if T::lit(u) < (-(z * z) / T::lit(2.0)).exp() {
                return x;
            }
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<T> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    /// `count` seeded draws; identical seeds give identical sequences.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn to_f64(&self) -> BoundedNormal<f64> {
        BoundedNormal { mu: self.mu.as_f64(), sigma: self.sigma.as_f64() }
    }
}

/// Line+Cone response on the wire: most likely ρ and the cone bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElicitationPayload<T> {
    pub mu: T,
    pub b_lower: T,
    pub b_upper: T,
}

/// A validated Line+Cone response with the belief fitted to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "ElicitationPayload<T>",
    into = "ElicitationPayload<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct ElicitationRecord<T> {
    pub mu: T,
    pub b_lower: T,
    pub b_upper: T,
    pub ci_width: T,
    pub fitted: BoundedNormal<T>,
}

impl<T: Real> TryFrom<ElicitationPayload<T>> for ElicitationRecord<T> {
    type Error = Error;

    fn try_from(p: ElicitationPayload<T>) -> Result<Self> {
        fit_from_elicitation(p.mu, p.b_lower, p.b_upper)
    }
}

impl<T: Real> From<ElicitationRecord<T>> for ElicitationPayload<T> {
    fn from(r: ElicitationRecord<T>) -> Self {
        r.payload()
    }
}

impl<T: Real> ElicitationRecord<T> {
    pub fn payload(&self) -> ElicitationPayload<T> {
        ElicitationPayload { mu: self.mu, b_lower: self.b_lower, b_upper: self.b_upper }
    }
}

/// Fits a belief to a Line+Cone response.
///
/// The cone bounds are read as an untruncated central 95% interval, so
/// `sigma = (b_upper - b_lower) / (2 * 1.96)`, floored at [`SIGMA_MIN`] so that
/// zero-width cones still give a proper density.
pub fn fit_from_elicitation<T: Real>(mu: T, b_lower: T, b_upper: T) -> Result<ElicitationRecord<T>> {
    for v in [mu, b_lower, b_upper] {
        if !v.is_finite() || v < -T::one() || v > T::one() {
            return Err(Error::InvalidElicitation(format!(
                "value {} outside [-1, 1]",
                v.as_f64()
            )));
        }
    }
    if !(b_lower <= mu && mu <= b_upper) {
        return Err(Error::InvalidElicitation(format!(
            "bounds out of order: b_lower={}, mu={}, b_upper={}",
            b_lower.as_f64(),
            mu.as_f64(),
            b_upper.as_f64()
        )));
    }
    let ci_width = b_upper - b_lower;
    let sigma = (ci_width / T::lit(2.0 * Z_95)).max(T::lit(SIGMA_MIN));
    Ok(ElicitationRecord { mu, b_lower, b_upper, ci_width, fitted: BoundedNormal::new(mu, sigma)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    type BoundedNormal = super::BoundedNormal<f64>;

    fn fit_from_elicitation(mu: f64, lo: f64, hi: f64) -> Result<ElicitationRecord<f64>> {
        super::fit_from_elicitation(mu, lo, hi)
    }

    /// Trapezoid integral of the untruncated normal density over [-1, 1].
    fn oracle_mass(mu: f64, sigma: f64, n: usize) -> f64 {
        let h = 2.0 / (n - 1) as f64;
        let f = |x: f64| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut acc = 0.5 * (f(-1.0) + f(1.0));
        for i in 1..n - 1 {
            acc += f(-1.0 + i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn pdf_flat_limit() {
        let b = BoundedNormal::new(0.0, 1e6).unwrap();
        assert!((b.pdf(0.3) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pdf_zero_outside_support() {
        let b = BoundedNormal::new(0.0, 0.5).unwrap();
        assert_eq!(b.pdf(1.5), 0.0);
        assert_eq!(b.pdf(-1.0001), 0.0);
        assert_eq!(b.ln_pdf(1.5), f64::NEG_INFINITY);
    }

    #[test]
    fn pdf_matches_numerical_normalization() {
        // Oracle: untruncated density at 0.85 divided by a 1e5-point trapezoid
        // estimate of its mass on [-1, 1].
        let (mu, sigma) = (0.85, 0.1);
        let mass = oracle_mass(mu, sigma, 100_000);
        let expected = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()) / mass;
        let b = BoundedNormal::new(mu, sigma).unwrap();
        assert!((b.pdf(0.85) - expected).abs() < 1e-6, "{} vs {}", b.pdf(0.85), expected);
        // frozen value from the oracle
        assert!((b.pdf(0.85) - 4.275_025).abs() < 1e-5);
    }

    #[test]
    fn quantile_examples() {
        let b = BoundedNormal::new(0.0, 0.5).unwrap();
        assert!(b.quantile(0.5).unwrap().abs() < 1e-10);
        let flat = BoundedNormal::new(0.0, 1e6).unwrap();
        assert!((flat.quantile(0.25).unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn quantile_matches_tabulated_cdf() {
        // Oracle: CDF tabulated by trapezoid on a dense grid, inverted by search.
        let (mu, sigma) = (0.6, 0.2);
        let n = 200_001;
        let h = 2.0 / (n - 1) as f64;
        let f = |x: f64| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
        let mut cum = vec![0.0; n];
        for i in 1..n {
            let (x0, x1) = (-1.0 + (i - 1) as f64 * h, -1.0 + i as f64 * h);
            cum[i] = cum[i - 1] + 0.5 * h * (f(x0) + f(x1));
        }
        let total = cum[n - 1];
        let idx = cum.iter().position(|c| c / total >= 0.975).unwrap();
        let (c0, c1) = (cum[idx - 1] / total, cum[idx] / total);
        let x0 = -1.0 + (idx - 1) as f64 * h;
        let oracle = x0 + h * (0.975 - c0) / (c1 - c0);
        let b = BoundedNormal::new(mu, sigma).unwrap();
        let q = b.quantile(0.975).unwrap();
        assert!((q - oracle).abs() < 1e-6, "{q} vs {oracle}");
        assert!((q - 0.934_564).abs() < 1e-5, "{q}");
    }

    #[test]
    fn quantile_rejects_bad_probability() {
        let b = BoundedNormal::new(0.0, 0.5).unwrap();
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(b.quantile(p), Err(Error::InvalidProbability(_))));
        }
    }

    #[test]
    fn invalid_beliefs_rejected() {
        assert!(BoundedNormal::new(1.2, 0.1).is_err());
        assert!(BoundedNormal::new(0.0, 0.0).is_err());
        assert!(BoundedNormal::new(0.0, f64::INFINITY).is_err());
        assert!(BoundedNormal::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn sampling_examples() {
        let b = BoundedNormal::new(0.0, 0.3).unwrap();
        let s = b.sample(7, 100_000);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!(s.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(b.sample(99, 1000), b.sample(99, 1000));
    }

    #[test]
    fn sample_mean_matches_grid_oracle() {
        let (mu, sigma) = (0.9, 0.4);
        let n = 100_001;
        let h = 2.0 / (n - 1) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = -1.0 + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let f = (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
            num += w * x * f;
            den += w * f;
        }
        let oracle_mean = num / den;
        let b = BoundedNormal::new(mu, sigma).unwrap();
        let s = b.sample(11, 100_000);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - oracle_mean).abs() < 0.01, "{mean} vs {oracle_mean}");
        assert!((b.mean() - oracle_mean).abs() < 1e-8);
    }

    #[test]
    fn fit_examples() {
        let r = fit_from_elicitation(0.0, -0.98, 0.98).unwrap();
        assert!((r.fitted.sigma() - 0.5).abs() < 1e-12);
        assert!((r.ci_width - 1.96).abs() < 1e-12);

        let r = fit_from_elicitation(0.85, 0.85, 0.85).unwrap();
        assert_eq!(r.fitted.sigma(), SIGMA_MIN);
        assert_eq!(r.fitted.mu(), 0.85);
        assert_eq!(r.ci_width, 0.0);

        let r = fit_from_elicitation(0.6, 0.2, 1.0).unwrap();
        assert!((r.fitted.sigma() - 0.8 / 3.92).abs() < 1e-12);
        assert!((r.fitted.sigma() - 0.2041).abs() < 1e-4);
    }

    #[test]
    fn fit_rejects_bad_payloads() {
        assert!(fit_from_elicitation(0.5, 0.6, 0.9).is_err());
        assert!(fit_from_elicitation(0.5, 0.1, 0.4).is_err());
        assert!(fit_from_elicitation(0.5, -1.2, 0.9).is_err());
        assert!(fit_from_elicitation(0.5, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn record_wire_form_is_flat() {
        let r = fit_from_elicitation(0.25, -0.5, 0.75).unwrap();
        let json = serde_json::to_value(r).unwrap();
        assert_eq!(json, serde_json::json!({"mu": 0.25, "b_lower": -0.5, "b_upper": 0.75}));
        let back: ElicitationRecord<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
        let bad = serde_json::json!({"mu": 0.9, "b_lower": -0.5, "b_upper": 0.75});
        assert!(serde_json::from_value::<ElicitationRecord<f64>>(bad).is_err());
    }

    #[test]
    fn works_in_f32() {
        let b = super::BoundedNormal::<f32>::new(0.3, 0.2).unwrap();
        let q = b.quantile(0.975).unwrap();
        assert!((b.cdf(q) - 0.975).abs() < 1e-5);
        let b64 = b.to_f64();
        assert!((q as f64 - b64.quantile(0.975).unwrap()).abs() < 1e-5);
    }
}
