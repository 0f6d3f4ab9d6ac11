//! Synthetic data generators and Monte Carlo studies: the jittered-integer
//! example, nightly observation designs, peak sampling distributions and
//! coverage of the confidence set.

use std::f64::consts::{SQRT_2, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::InferenceConfig;
use crate::error::{Error, Result};
use crate::inference::{confidence_set_with_engine, Candidates, RandomizationEngine};
use crate::periodogram::{compute_periodogram, PeriodGrid};
use crate::rng::{RngKey, StreamContext};
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Half-width of the midnight window, in days (about half an hour).
pub const MIDNIGHT_HALF_WIDTH: f64 = 0.0208;

/// Minimum separation enforced between simulated times, in days.
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimDesign {
    /// `t_i = i + 0.05 U_i`, `U_i ~ Unif[-1, 1]`, `i = 1..n`.
    Example1,
    /// Uniform over the night half of each day, phase in `[0.5, 1]`.
    NightUniform,
    /// Night only, density `-pi sin(2 pi phi)` peaking at midnight.
    NightSinusoid,
    /// Uniform within `0.75 +- 0.0208` of each day.
    MidnightWindow,
}

impl SimDesign {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "example1" | "ex1" => Some(Self::Example1),
            "i" | "1" | "night-uniform" => Some(Self::NightUniform),
            "ii" | "2" | "night-sinusoid" => Some(Self::NightSinusoid),
            "iii" | "3" | "midnight-window" => Some(Self::MidnightWindow),
            _ => None,
        }
    }

    /// Draw a within-day phase in `[0, 1)` days. Not used for `Example1`.
    pub fn sample_phase<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Self::Example1 | Self::NightUniform => rng.random_range(0.5..1.0),
            Self::NightSinusoid => {
                // CDF on [0.5, 1] is (1 + cos(2 pi phi)) / 2.
                let u: f64 = rng.random();
                1.0 - (2.0 * u - 1.0).clamp(-1.0, 1.0).acos() / TAU
            }
            Self::MidnightWindow => {
                rng.random_range(0.75 - MIDNIGHT_HALF_WIDTH..=0.75 + MIDNIGHT_HALF_WIDTH)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub design: SimDesign,
    pub n: usize,
    pub theta_star: f64,
    /// Period of the observing schedule, in days.
    pub theta_obs: f64,
    pub sigma: f64,
    /// Number of observing nights the day index is drawn from.
    pub span_days: u32,
}

impl SimulationSpec {
    /// Signal period `sqrt(2)`, noise 1.5, one-day schedule, `n` nights.
    pub fn new(design: SimDesign, n: usize) -> Self {
        let sigma = if design == SimDesign::Example1 { 1.0 } else { 1.5 };
        Self {
            design,
            n,
            theta_star: SQRT_2,
            theta_obs: 1.0,
            sigma,
            span_days: n.max(1) as u32,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_span(mut self, span_days: u32) -> Self {
        self.span_days = span_days;
        self
    }

    pub fn with_theta_star(mut self, theta_star: f64) -> Self {
        self.theta_star = theta_star;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.theta_star > 0.0 && self.theta_star.is_finite()) {
            return Err(Error::NonPositivePeriod(self.theta_star));
        }
        if !(self.theta_obs > 0.0 && self.theta_obs.is_finite()) {
            return Err(Error::NonPositivePeriod(self.theta_obs));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.span_days == 0 {
            return Err(Error::InvalidConfig("span_days must be at least 1".into()));
        }
        Ok(())
    }
}

fn cast_times<T: Real>(raw: &mut [f64]) -> Option<Vec<T>> {
    raw.sort_by(f64::total_cmp);
    let times: Vec<T> = raw.iter().map(|&t| T::lit(t)).collect();
    let ok = times
        .windows(2)
        .all(|w| w[1] > w[0] && (w[1] - w[0]).to_f64_lossy() >= MIN_SEPARATION);
    ok.then_some(times)
}

/// Observation times for a design, sorted. Draws whose times collide (closer
/// than `MIN_SEPARATION` after conversion to `T`) are redrawn from the same
/// stream, so the result is still a pure function of `key`.
pub fn sample_observation_times<T: Real>(spec: &SimulationSpec, key: &RngKey) -> Result<Vec<T>> {
    spec.validate()?;
    let mut rng = key.rng();
    for _ in 0..1000 {
        let mut raw: Vec<f64> = match spec.design {
            SimDesign::Example1 => (1..=spec.n)
                .map(|i| i as f64 + 0.05 * rng.random_range(-1.0..=1.0))
                .collect(),
            d => (0..spec.n)
                .map(|_| {
                    let day = rng.random_range(0..spec.span_days) as f64;
                    (day + d.sample_phase(&mut rng)) * spec.theta_obs
                })
                .collect(),
        };
        if let Some(times) = cast_times(&mut raw) {
            return Ok(times);
        }
    }
    Err(Error::InvalidConfig(format!(
        "could not draw {} distinct times in {} days",
        spec.n, spec.span_days
    )))
}

fn noise_draws(n: usize, sigma: f64, key: &RngKey) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked finite and positive");
    let mut rng = key.rng();
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

fn reported_sigma<T: Real>(sigma: f64) -> T {
    // A noiseless series still needs positive weights; unit weights keep the
    // periodogram unchanged.
    if sigma > 0.0 {
        T::lit(sigma)
    } else {
        T::one()
    }
}

/// `y_i = 1 - cos(2 pi t_i / theta*) + N(0, sigma^2)`, reported with
/// `sigma_i = sigma` (or 1 when `sigma == 0`).
pub fn simulate_harmonic_data<T: Real>(
    times: &[T],
    theta_star: f64,
    sigma: f64,
    key: &RngKey,
) -> Result<TimeSeries<T>> {
    if !(theta_star > 0.0 && theta_star.is_finite()) {
        return Err(Error::NonPositivePeriod(theta_star));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let noise = noise_draws(times.len(), sigma, key);
    let values = times
        .iter()
        .zip(&noise)
        .map(|(&t, &e)| T::lit(1.0 - (TAU * t.to_f64_lossy() / theta_star).cos() + e))
        .collect();
    TimeSeries::new(times.to_vec(), values, vec![reported_sigma(sigma); times.len()])
}

/// The jittered-integer example with unit noise.
pub fn simulate_example1<T: Real>(n: usize, key: &RngKey) -> Result<TimeSeries<T>> {
    simulate(&SimulationSpec::new(SimDesign::Example1, n), key)
}

/// Draw one synthetic series. Times come from `key` in the `SimTimes`
/// context and noise from the `SimNoise` context.
pub fn simulate<T: Real>(spec: &SimulationSpec, key: &RngKey) -> Result<TimeSeries<T>> {
    spec.validate()?;
    let times = sample_observation_times::<T>(spec, &key.with_context(StreamContext::SimTimes))?;
    let noise_key = key.with_context(StreamContext::SimNoise);
    match spec.design {
        SimDesign::Example1 => {
            let noise = noise_draws(spec.n, spec.sigma, &noise_key);
            let values = times
                .iter()
                .zip(&noise)
                .map(|(&t, &e)| T::lit(1.5 * (TAU * t.to_f64_lossy() / spec.theta_star).cos() + e))
                .collect();
            TimeSeries::new(times, values, vec![reported_sigma(spec.sigma); spec.n])
        }
        _ => simulate_harmonic_data(&times, spec.theta_star, spec.sigma, &noise_key),
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// How a replicate counts as covering the true period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageRule {
    /// The test at the grid point nearest `theta*` has `p > alpha`.
    #[default]
    NearestPoint,
    /// The nearest grid point is also among the peak-filtered candidates.
    PeakFiltered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub spec: SimulationSpec,
    pub rule: CoverageRule,
    pub alpha: f64,
    pub replicates_per_test: u64,
    pub grid_len: usize,
    pub target: f64,
    pub reps: u64,
    pub covered: u64,
    /// Replicates where the target could not be tested at all.
    pub untestable: u64,
    pub coverage: f64,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RepCoverage {
    Covered,
    Missed,
    Untestable,
}

/// Fraction of simulated datasets whose level `1 - alpha` confidence set
/// contains the grid point nearest `theta*`.
pub fn coverage_experiment<T: Real>(
    spec: &SimulationSpec,
    reps: u64,
    grid: &PeriodGrid<T>,
    cfg: &InferenceConfig,
    rule: CoverageRule,
    key: &RngKey,
) -> Result<CoverageReport> {
    spec.validate()?;
    let cfg = cfg.validated()?;
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let k_target = grid.nearest(T::lit(spec.theta_star));
    let outcomes: Vec<RepCoverage> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<RepCoverage> {
            let seed = key.with_replicate(r).child_seed();
            let ts = simulate::<T>(spec, &RngKey::new(seed, StreamContext::Coverage))?;
            let engine = match RandomizationEngine::new(&ts, grid.periods()) {
                Ok(e) => e,
                Err(Error::DegenerateBaseline) => return Ok(RepCoverage::Untestable),
                Err(e) => return Err(e),
            };
            let inference_key = RngKey::new(seed, StreamContext::SignFlip);
            let accepted = match rule {
                CoverageRule::NearestPoint => {
                    match engine.test(k_target, &cfg, &inference_key.with_theta(k_target as u64)) {
                        Ok(o) => o.p_value > cfg.alpha,
                        Err(Error::SingularDesign { .. }) => return Ok(RepCoverage::Untestable),
                        Err(e) => return Err(e),
                    }
                }
                CoverageRule::PeakFiltered => {
                    let cs = confidence_set_with_engine(&engine, &cfg, &inference_key, &Candidates::Peaks)?;
                    cs.contains(grid.periods()[k_target])
                }
            };
            Ok(if accepted {
                RepCoverage::Covered
            } else {
                RepCoverage::Missed
            })
        })
        .collect::<Result<_>>()?;
    let covered = outcomes.iter().filter(|&&o| o == RepCoverage::Covered).count() as u64;
    let untestable = outcomes.iter().filter(|&&o| o == RepCoverage::Untestable).count() as u64;
    Ok(CoverageReport {
        spec: spec.clone(),
        rule,
        alpha: cfg.alpha,
        replicates_per_test: cfg.replicates,
        grid_len: grid.len(),
        target: grid.periods()[k_target].to_f64_lossy(),
        reps,
        covered,
        untestable,
        coverage: covered as f64 / reps as f64,
        ci95: wilson_interval(covered, reps, 1.959_963_984_540_054),
    })
}

/// Periodogram argmax of `reps` independent simulated series, in replicate
/// order.
pub fn peak_sampling_distribution<T: Real>(
    spec: &SimulationSpec,
    reps: u64,
    grid: &PeriodGrid<T>,
    key: &RngKey,
) -> Result<Vec<T>> {
    spec.validate()?;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let ts = simulate::<T>(spec, &key.with_replicate(r))?;
            let pg = compute_periodogram(&ts, grid)?;
            Ok(grid.periods()[pg.argmax()])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakMode {
    pub low: f64,
    pub high: f64,
    /// Most frequent value inside the mode (smallest on ties).
    pub location: f64,
    pub count: usize,
    pub mass: f64,
}

/// Group sorted samples into modes: consecutive values closer than
/// `merge_width` share a mode. Modes are returned by decreasing mass.
pub fn peak_modes(samples: &[f64], merge_width: f64) -> Vec<PeakMode> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    let total = samples.len().max(1) as f64;
    let mut modes = Vec::new();
    let mut start = 0;
    for i in 1..=xs.len() {
        if i == xs.len() || xs[i] - xs[i - 1] > merge_width {
            let chunk = &xs[start..i];
            if !chunk.is_empty() {
                let (mut best, mut best_count, mut j) = (chunk[0], 0, 0);
                while j < chunk.len() {
                    let run = chunk[j..].iter().take_while(|&&v| v == chunk[j]).count();
                    if run > best_count {
                        best = chunk[j];
                        best_count = run;
                    }
                    j += run;
                }
                modes.push(PeakMode {
                    low: chunk[0],
                    high: chunk[chunk.len() - 1],
                    location: best,
                    count: chunk.len(),
                    mass: chunk.len() as f64 / total,
                });
            }
            start = i;
        }
    }
    modes.sort_by(|a, b| b.count.cmp(&a.count).then(a.low.total_cmp(&b.low)));
    modes
}

/// Fraction of samples within `radius` of `centre`.
pub fn mass_near(samples: &[f64], centre: f64, radius: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|&&x| (x - centre).abs() <= radius).count() as f64 / samples.len() as f64
}
