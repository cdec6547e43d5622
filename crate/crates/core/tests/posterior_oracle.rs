mod common;

use corrbelief::bayes::{posterior, posterior_grid, PriorSpec};
use corrbelief::dataset::generate;
use corrbelief::{BoundedNormalBelief, CorrelationDataset, McmcConfig};

use common::brute_posterior;

fn dataset(rho: f64, n: usize, seed: u64) -> CorrelationDataset {
    generate(rho, n, seed).unwrap()
}

#[test]
fn grid_posterior_matches_brute_force() {
    let d = dataset(0.4, 40, 1);
    let z = d.standardized();
    let prior = BoundedNormalBelief::new(-0.2, 0.3).unwrap();
    let (mean, lo, hi) = brute_posterior(&z, |r| prior.ln_pdf(r), 20_001);
    let g = posterior_grid(&d, &PriorSpec::Informed(prior)).unwrap();
    let (glo, ghi) = g.central_interval(0.95).unwrap();
    assert!((g.mean() - mean).abs() < 1e-3, "{} vs {mean}", g.mean());
    assert!((glo - lo).abs() < 0.01 && (ghi - hi).abs() < 0.01);
}

#[test]
fn uniform_prior_strong_correlation() {
    let d = dataset(0.9, 100, 3);
    let r = posterior(&d, &PriorSpec::Uniform, &McmcConfig::default(), 11).unwrap();
    let g = posterior_grid(&d, &PriorSpec::Uniform).unwrap();
    assert!((r.mean - g.mean()).abs() < 0.03);
    // Known-unit-variance model: Fisher information n(1+r^2)/(1-r^2)^2.
    let rs = d.r_sample();
    let sd = (1.0 - rs * rs) / (d.n() as f64 * (1.0 + rs * rs)).sqrt();
    let asymptotic = 2.0 * 1.96 * sd;
    let rel = (r.ci_width() - asymptotic).abs() / asymptotic;
    assert!(rel < 0.15, "CI width {} vs asymptotic {asymptotic}", r.ci_width());
}

#[test]
fn flat_informed_prior_equals_uniform() {
    let d = dataset(-0.4, 30, 4);
    let cfg = McmcConfig::default();
    let flat = PriorSpec::Informed(BoundedNormalBelief::new(0.9, 1e4).unwrap());
    let a = posterior(&d, &flat, &cfg, 1).unwrap();
    let b = posterior(&d, &PriorSpec::Uniform, &cfg, 2).unwrap();
    assert!((a.mean - b.mean).abs() < 0.02);
    let (ga, gb) = (posterior_grid(&d, &flat).unwrap(), posterior_grid(&d, &PriorSpec::Uniform).unwrap());
    assert!((ga.mean() - gb.mean()).abs() < 1e-6);
}

#[test]
fn posterior_compromises_between_prior_and_data() {
    let d = (0..200)
        .map(|s| dataset(0.2, 10, s))
        .find(|d| (d.r_sample() - 0.2).abs() < 0.02)
        .expect("some seed gives r close to 0.2");
    let prior = PriorSpec::Informed(BoundedNormalBelief::new(-0.8, 0.05).unwrap());
    let r = posterior(&d, &prior, &McmcConfig::default(), 5).unwrap();
    assert!(r.mean > -0.8 && r.mean < d.r_sample(), "{}", r.mean);
    assert!((r.mean - posterior_grid(&d, &prior).unwrap().mean()).abs() < 0.02);
}

#[test]
fn sampler_agrees_with_grid_on_random_cases() {
    for case in 0..20u64 {
        let rho = -0.9 + 1.8 * ((case * 37 % 20) as f64 / 19.0);
        let n = if case % 2 == 0 { 10 } else { 100 };
        let d = dataset(rho, n, 100 + case);
        let prior = if case % 3 == 0 {
            PriorSpec::Uniform
        } else {
            let mu = -0.8 + 1.6 * ((case * 13 % 20) as f64 / 19.0);
            PriorSpec::Informed(BoundedNormalBelief::new(mu, 0.1 + 0.02 * case as f64).unwrap())
        };
        let r = posterior(&d, &prior, &McmcConfig::default(), case).unwrap();
        let g = posterior_grid(&d, &prior).unwrap();
        assert!((r.mean - g.mean()).abs() < 0.02, "case {case}: {} vs {}", r.mean, g.mean());
        assert!(r.samples.iter().all(|s| s.abs() < 1.0));
        assert!((r.grid.integral() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn more_data_narrows_the_posterior() {
    for (i, rho) in [0.0, 0.4, -0.4, 0.9, -0.9].into_iter().enumerate() {
        let small = posterior(&dataset(rho, 10, i as u64), &PriorSpec::Uniform, &McmcConfig::default(), 1).unwrap();
        let large = posterior(&dataset(rho, 100, i as u64), &PriorSpec::Uniform, &McmcConfig::default(), 1).unwrap();
        assert!(small.ci_width() > large.ci_width(), "rho {rho}");
    }
}

#[test]
fn data_dominates_at_large_n() {
    let d = dataset(0.4, 2000, 9);
    let cfg = McmcConfig::default();
    let informed = posterior(&d, &PriorSpec::Informed(BoundedNormalBelief::new(0.0, 0.3).unwrap()), &cfg, 1).unwrap();
    let uniform = posterior(&d, &PriorSpec::Uniform, &cfg, 2).unwrap();
    assert!((informed.mean - uniform.mean).abs() < 0.01);
}

#[test]
fn seeded_posteriors_are_identical() {
    let d = dataset(0.4, 50, 2);
    let prior = PriorSpec::Informed(BoundedNormalBelief::new(0.1, 0.2).unwrap());
    let a = posterior(&d, &prior, &McmcConfig::default(), 77).unwrap();
    let b = posterior(&d, &prior, &McmcConfig::default(), 77).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples, b.samples);
    assert_ne!(a.samples, posterior(&d, &prior, &McmcConfig::default(), 78).unwrap().samples);
}

#[test]
fn f32_posterior_tracks_f64() {
    let d64 = dataset(0.5, 60, 8);
    let pts: Vec<[f32; 2]> = d64.points().iter().map(|p| [p[0] as f32, p[1] as f32]).collect();
    let d32 = corrbelief::dataset::CorrelationDataset::<f32>::from_points(pts, 0.5).unwrap();
    let g32 = posterior_grid(&d32, &PriorSpec::Uniform).unwrap();
    let g64 = posterior_grid(&d64, &PriorSpec::Uniform).unwrap();
    assert!((g32.mean() as f64 - g64.mean()).abs() < 1e-4);
}
