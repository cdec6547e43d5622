#![allow(dead_code)]

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Critical KS distance for large n at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Trapezoid rule for `f` on `[a, b]` with `n` points.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n - 1 {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Brute-force grid posterior summaries for a standardized dataset, written
/// from the likelihood formula directly: (mean, 2.5% quantile, 97.5% quantile).
pub fn brute_posterior(points: &[[f64; 2]], ln_prior: impl Fn(f64) -> f64, n: usize) -> (f64, f64, f64) {
    let h = 1.998 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -0.999 + i as f64 * h).collect();
    let ll: Vec<f64> = xs
        .iter()
        .map(|&r| {
            let s: f64 = points
                .iter()
                .map(|p| {
                    -(2.0 * std::f64::consts::PI).ln() - 0.5 * (1.0 - r * r).ln()
                        - (p[0] * p[0] - 2.0 * r * p[0] * p[1] + p[1] * p[1]) / (2.0 * (1.0 - r * r))
                })
                .sum();
            s + ln_prior(r)
        })
        .collect();
    let max = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<f64> = ll.iter().map(|l| (l - max).exp()).collect();
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + 0.5 * h * (d[i] + d[i - 1]);
    }
    let z = cum[n - 1];
    let mean = (1..n).map(|i| 0.5 * h * (xs[i] * d[i] + xs[i - 1] * d[i - 1])).sum::<f64>() / z;
    let q = |p: f64| {
        let i = cum.iter().position(|c| c / z >= p).unwrap();
        let (c0, c1) = (cum[i - 1] / z, cum[i] / z);
        xs[i - 1] + h * (p - c0) / (c1 - c0)
    };
    (mean, q(0.025), q(0.975))
}
