//! Posterior beliefs about ρ under the Prior-only, Bayesian-Informed and
//! Bayesian-Uniform models.
//!
//! The sampler is a fixed-width random-walk Metropolis chain. Every result
//! also carries a grid posterior computed by direct integration, which is the
//! density used for KLD and the oracle the sampler is checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::belief::BoundedNormal;
use crate::dataset::CorrelationDataset;
use crate::error::{Error, Result};
use crate::grid::{RhoGrid, GRID_SIZE};
use crate::scalar::Real;

/// Chains whose acceptance rate falls below this are reported as failures.
pub const MIN_ACCEPTANCE: f64 = 0.01;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    PriorOnly,
    BayesianInformed,
    BayesianUniform,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::PriorOnly, Model::BayesianInformed, Model::BayesianUniform];

    pub fn as_str(self) -> &'static str {
        match self {
            Model::PriorOnly => "PriorOnly",
            Model::BayesianInformed => "BayesianInformed",
            Model::BayesianUniform => "BayesianUniform",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum PriorSpec<T> {
    Informed(BoundedNormal<T>),
    /// Density 1/2 on `[-1, 1]`.
    Uniform,
}

impl<T: Real> PriorSpec<T> {
    pub fn ln_density(&self, rho: T) -> T {
        match self {
            PriorSpec::Informed(b) => b.ln_pdf(rho),
            PriorSpec::Uniform if rho >= -T::one() && rho <= T::one() => T::lit(0.5).ln(),
            PriorSpec::Uniform => T::neg_infinity(),
        }
    }

    pub fn model(&self) -> Model {
        match self {
            PriorSpec::Informed(_) => Model::BayesianInformed,
            PriorSpec::Uniform => Model::BayesianUniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub chains: usize,
    /// Kept draws per chain, after burn-in.
    pub samples_per_chain: usize,
    pub burn_in: usize,
    pub proposal_width: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { chains: 2, samples_per_chain: 20_000, burn_in: 1_000, proposal_width: 0.1 }
    }
}

/// Second moments of a standardized dataset; all the likelihood needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats<T> {
    pub n: T,
    pub sxx: T,
    pub syy: T,
    pub sxy: T,
}

impl<T: Real> SufficientStats<T> {
    pub fn from_points(points: &[[T; 2]]) -> Self {
        let mut s = Self { n: T::lit(points.len() as f64), sxx: T::zero(), syy: T::zero(), sxy: T::zero() };
        for p in points {
            s.sxx = s.sxx + p[0] * p[0];
            s.syy = s.syy + p[1] * p[1];
            s.sxy = s.sxy + p[0] * p[1];
        }
        s
    }

    pub fn from_dataset(dataset: &CorrelationDataset<T>) -> Self {
        Self::from_points(&dataset.standardized())
    }

    /// Bivariate normal log likelihood with unit variances and correlation
    /// `rho`; `-inf` for `|rho| >= 1`.
    pub fn log_likelihood(&self, rho: T) -> T {
        if !(rho.abs() < T::one()) {
            return T::neg_infinity();
        }
        let one_m = T::one() - rho * rho;
        let two = T::lit(2.0);
        -self.n * T::lit(LN_2PI) - self.n / two * one_m.ln()
            - (self.sxx - two * rho * self.sxy + self.syy) / (two * one_m)
    }
}

/// Log likelihood of raw points, summed term by term.
pub fn log_likelihood_points<T: Real>(points: &[[T; 2]], rho: T) -> Result<T> {
    if !(rho.abs() < T::one()) {
        return Err(Error::RhoOutOfRange(rho.as_f64()));
    }
    let one_m = T::one() - rho * rho;
    let two = T::lit(2.0);
    let per_point_const = -T::lit(LN_2PI) - one_m.ln() / two;
    Ok(points.iter().fold(T::zero(), |acc, p| {
        let (x, y) = (p[0], p[1]);
        acc + per_point_const - (x * x - two * rho * x * y + y * y) / (two * one_m)
    }))
}

/// Log likelihood of the dataset after z-scoring each coordinate.
pub fn log_likelihood<T: Real>(dataset: &CorrelationDataset<T>, rho: T) -> Result<T> {
    if !(rho.abs() < T::one()) {
        return Err(Error::RhoOutOfRange(rho.as_f64()));
    }
    Ok(SufficientStats::from_dataset(dataset).log_likelihood(rho))
}

/// A model's predicted posterior over ρ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PosteriorResult<T> {
    pub model: Model,
    pub mean: T,
    pub ci: [T; 2],
    pub grid: RhoGrid<T>,
    pub config: McmcConfig,
    /// Acceptance rate across all chains; absent for the prior-only model.
    #[serde(default)]
    pub acceptance_rate: Option<f64>,
    /// Pooled post-burn-in draws, chain-major. Exported separately.
    #[serde(skip)]
    pub samples: Vec<T>,
}

impl<T: Real> PosteriorResult<T> {
    pub fn ci_lower(&self) -> T {
        self.ci[0]
    }

    pub fn ci_upper(&self) -> T {
        self.ci[1]
    }

    pub fn ci_width(&self) -> T {
        self.ci[1] - self.ci[0]
    }

    /// Samples as JSON lines, one number per line.
    pub fn samples_jsonl(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 20);
        for s in &self.samples {
            out.push_str(&s.as_f64().to_string());
            out.push('\n');
        }
        out
    }
}

/// Samples the posterior with random-walk Metropolis and attaches the grid
/// posterior.
pub fn posterior<T: Real>(
    dataset: &CorrelationDataset<T>,
    prior: &PriorSpec<T>,
    config: &McmcConfig,
    seed: u64,
) -> Result<PosteriorResult<T>> {
    if config.chains == 0 || config.samples_per_chain < 2 {
        return Err(Error::Invalid("need at least one chain and two samples per chain".into()));
    }
    if !(config.proposal_width > 0.0 && config.proposal_width.is_finite()) {
        return Err(Error::Invalid("proposal width must be positive".into()));
    }
    let stats = SufficientStats::from_dataset(dataset);
    let ln_post = |rho: T| prior.ln_density(rho) + stats.log_likelihood(rho);
    let width = T::lit(config.proposal_width);

    let mut samples = Vec::with_capacity(config.chains * config.samples_per_chain);
    let (mut accepted, mut steps) = (0usize, 0usize);
    for chain in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain as u64);
        let mut x = start_point(prior, &mut rng);
        let mut lx = ln_post(x);
        for step in 0..config.burn_in + config.samples_per_chain {
            let z: f64 = rng.sample(StandardNormal);
            let proposal = x + width * T::lit(z);
            let u: f64 = rng.random();
            steps += 1;
            // outside (-1, 1) the prior density is zero: reject without
            // evaluating the likelihood
            if proposal.abs() < T::one() {
                let lp = ln_post(proposal);
                if T::lit(u).ln() < lp - lx {
                    x = proposal;
                    lx = lp;
                    accepted += 1;
                }
            }
            if step >= config.burn_in {
                samples.push(x);
            }
        }
    }
    let rate = accepted as f64 / steps as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::SamplerFailure { rate, min: MIN_ACCEPTANCE });
    }

    let mean = samples.iter().copied().fold(T::zero(), |a, b| a + b) / T::lit(samples.len() as f64);
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let ci = [empirical_quantile(&sorted, T::lit(0.025)), empirical_quantile(&sorted, T::lit(0.975))];
    Ok(PosteriorResult {
        model: prior.model(),
        mean,
        ci,
        grid: posterior_grid(dataset, prior)?,
        config: *config,
        acceptance_rate: Some(rate),
        samples,
    })
}

fn start_point<T: Real, R: Rng>(prior: &PriorSpec<T>, rng: &mut R) -> T {
    match prior {
        PriorSpec::Informed(b) => b.draw(rng).max(T::lit(-0.99)).min(T::lit(0.99)),
        PriorSpec::Uniform => T::lit(rng.random_range(-0.5..0.5)),
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn empirical_quantile<T: Real>(sorted: &[T], p: T) -> T {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = p * T::lit((sorted.len() - 1) as f64);
    let lo = pos.floor().to_usize().unwrap_or(0).min(sorted.len() - 1);
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - T::lit(lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Grid posterior ∝ prior × likelihood on the default grid.
pub fn posterior_grid<T: Real>(dataset: &CorrelationDataset<T>, prior: &PriorSpec<T>) -> Result<RhoGrid<T>> {
    posterior_grid_sized(dataset, prior, GRID_SIZE)
}

pub fn posterior_grid_sized<T: Real>(
    dataset: &CorrelationDataset<T>,
    prior: &PriorSpec<T>,
    size: usize,
) -> Result<RhoGrid<T>> {
    let stats = SufficientStats::from_dataset(dataset);
    RhoGrid::from_log_density(size, |rho| prior.ln_density(rho) + stats.log_likelihood(rho))
}

/// The prior itself on the grid.
pub fn prior_grid<T: Real>(belief: &BoundedNormal<T>, size: usize) -> Result<RhoGrid<T>> {
    RhoGrid::from_density(size, |rho| belief.pdf(rho))
}

/// No-update baseline: the prior with analytic summaries. Samples are drawn
/// from the prior only so the result has the same shape as the others.
pub fn prior_only<T: Real>(belief: &BoundedNormal<T>, config: &McmcConfig, seed: u64) -> Result<PosteriorResult<T>> {
    let (lo, hi) = belief.central_interval(T::lit(0.95))?;
    Ok(PosteriorResult {
        model: Model::PriorOnly,
        mean: belief.mean(),
        ci: [lo, hi],
        grid: prior_grid(belief, GRID_SIZE)?,
        config: *config,
        acceptance_rate: None,
        samples: belief.sample(seed, config.chains * config.samples_per_chain),
    })
}
