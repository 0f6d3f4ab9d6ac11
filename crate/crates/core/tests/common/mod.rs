#![allow(dead_code)]

use periodica::{RngKey, StreamContext, TimeSeries};
use rand::Rng;

pub fn key(seed: u64) -> RngKey {
    RngKey::new(seed, StreamContext::Custom)
}

/// Random series: increasing times with gaps in `[0.05, 0.05 + 2 * mean_gap]`,
/// a harmonic plus uniform noise, sigmas in `[0.2, 2]`.
pub fn random_series(n: usize, seed: u64) -> TimeSeries<f64> {
    let mut rng = key(seed).rng();
    let mean_gap = rng.random_range(0.3..3.0);
    let theta = rng.random_range(0.7..20.0);
    let amp = rng.random_range(0.0..3.0);
    let mut t = rng.random_range(-50.0..50.0);
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        t += 0.05 + rng.random_range(0.0..2.0 * mean_gap);
        times.push(t);
    }
    let values = times
        .iter()
        .map(|&t| amp * (std::f64::consts::TAU * t / theta).sin() + rng.random_range(-1.0..1.0))
        .collect();
    let sigmas = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    TimeSeries::new(times, values, sigmas).unwrap()
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest one-sided deviation `max_x (F_n(x) - F(x))`: how far the sample
/// sits above the reference CDF.
pub fn ks_upper(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        d = d.max(j as f64 / n - cdf(xs[i]));
        i = j;
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sided 1% critical value for one sample of size `n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Asymptotic one-sided 1% critical value, `sqrt(ln(100) / 2n)`.
pub fn ks_one_sided_critical_1pct(n: usize) -> f64 {
    (100f64.ln() / (2.0 * n as f64)).sqrt()
}

pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n * m) as f64).sqrt()
}
