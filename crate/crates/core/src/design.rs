//! Choosing observation designs by synthetic reanalysis.
//!
//! For each candidate design, synthetic datasets are generated from the
//! fitted harmonic at the assumed true period, re-analysed with the
//! randomization confidence set, and scored by how many accepted periods lie
//! farther than `tol_eps` from the truth. The simplest design with no such
//! failures across all synthetic datasets is selected.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::InferenceConfig;
use crate::error::{Error, Result};
use crate::harmonic::{fit_harmonic, phase_trig, HarmonicParams};
use crate::inference::{confidence_set, Candidates, ConfidenceSet};
use crate::periodogram::PeriodGrid;
use crate::rng::{RngKey, StreamContext};
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Jittered times closer than this are treated as a collision.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    /// Existing times shifted by `delta * Unif[-1, 1]`.
    Jitter,
    /// `extra_n` new nightly observations after the last one.
    Augment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationDesign {
    pub kind: DesignKind,
    pub delta: f64,
    pub extra_n: usize,
    pub window_days: u32,
    pub micro_jitter: f64,
}

impl ObservationDesign {
    pub fn jitter(delta: f64) -> Self {
        Self {
            kind: DesignKind::Jitter,
            delta,
            extra_n: 0,
            window_days: 90,
            micro_jitter: 0.01,
        }
    }

    pub fn augment(extra_n: usize) -> Self {
        Self {
            kind: DesignKind::Augment,
            delta: 0.0,
            extra_n,
            window_days: 90,
            micro_jitter: 0.01,
        }
    }

    /// `delta` for jitter designs, `extra_n` for augmentation designs.
    pub fn complexity(&self) -> f64 {
        match self.kind {
            DesignKind::Jitter => self.delta,
            DesignKind::Augment => self.extra_n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self.kind {
            DesignKind::Jitter if !(self.delta >= 0.0 && self.delta.is_finite()) => {
                bad(format!("jitter delta must be >= 0, got {}", self.delta))
            }
            DesignKind::Jitter if self.extra_n != 0 => bad("jitter design with extra_n set".into()),
            DesignKind::Augment if self.delta != 0.0 => bad("augmentation design with delta set".into()),
            DesignKind::Augment if self.window_days == 0 => bad("window_days must be at least 1".into()),
            DesignKind::Augment if !(self.micro_jitter >= 0.0 && self.micro_jitter < 0.5) => {
                bad(format!("micro_jitter must be in [0, 0.5), got {}", self.micro_jitter))
            }
            _ => Ok(()),
        }
    }
}

/// `delta` in `{0, 0.02, ..., 0.30}` days.
pub fn default_jitter_grid() -> Vec<ObservationDesign> {
    (0..=15).map(|k| ObservationDesign::jitter(k as f64 / 50.0)).collect()
}

/// `extra_n` in `{0, 5, ..., 150}`.
pub fn default_augment_grid() -> Vec<ObservationDesign> {
    (0..=30).map(|k| ObservationDesign::augment(5 * k)).collect()
}

/// Noise level used for synthetic values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaSource {
    /// `N(0, sigma_i^2)` with the observed sigmas.
    #[default]
    Observed,
    /// No noise; sigmas are still carried as weights.
    Noiseless,
}

fn synthetic_values<T: Real>(
    times: &[f64],
    sigmas: &[f64],
    theta_star: f64,
    psi: &HarmonicParams<T>,
    source: SigmaSource,
    rng: &mut impl Rng,
) -> Vec<T> {
    let theta = T::lit(theta_star);
    times
        .iter()
        .zip(sigmas)
        .map(|(&t, &s)| {
            let (c, sn) = phase_trig(T::lit(t), theta);
            let clean = psi.eval_trig(c, sn);
            match source {
                SigmaSource::Observed => {
                    let e: f64 = Normal::new(0.0, s).expect("positive sigma").sample(rng);
                    clean + T::lit(e)
                }
                SigmaSource::Noiseless => clean,
            }
        })
        .collect()
}

/// Sort rows by time and cast; `None` if two times collide.
fn assemble<T: Real>(mut rows: Vec<(f64, f64)>) -> Option<(Vec<T>, Vec<f64>, Vec<f64>)> {
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let times: Vec<T> = rows.iter().map(|r| T::lit(r.0)).collect();
    let distinct = times
        .windows(2)
        .all(|w| w[1] > w[0] && (w[1] - w[0]).to_f64_lossy() >= COLLISION_TOLERANCE);
    distinct.then(|| {
        let raw = rows.iter().map(|r| r.0).collect();
        let sigmas = rows.iter().map(|r| r.1).collect();
        (times, raw, sigmas)
    })
}

fn finish<T: Real>(
    rows: Vec<(f64, f64)>,
    theta_star: f64,
    psi: &HarmonicParams<T>,
    source: SigmaSource,
    rng: &mut impl Rng,
) -> Option<Result<TimeSeries<T>>> {
    let (times, raw, sigmas) = assemble::<T>(rows)?;
    let values = synthetic_values(&raw, &sigmas, theta_star, psi, source, rng);
    Some(TimeSeries::new(times, values, sigmas.into_iter().map(T::lit).collect()))
}

fn check_theta(theta_star: f64) -> Result<()> {
    if theta_star > 0.0 && theta_star.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositivePeriod(theta_star))
    }
}

/// Jittered copy of the observation times with regenerated values.
/// Sigmas travel with their observation when the jitter reorders times.
pub fn synth_jitter<T: Real>(
    ts: &TimeSeries<T>,
    delta: f64,
    theta_star: f64,
    psi_hat: &HarmonicParams<T>,
    source: SigmaSource,
    key: &RngKey,
) -> Result<TimeSeries<T>> {
    ObservationDesign::jitter(delta).validate()?;
    check_theta(theta_star)?;
    let mut rng = key.rng();
    for _ in 0..MAX_REDRAWS {
        let rows: Vec<(f64, f64)> = ts
            .times()
            .iter()
            .zip(ts.sigmas())
            .map(|(&t, &s)| {
                let shift = delta * rng.random_range(-1.0..=1.0);
                assert!(shift.abs() <= delta, "jitter outside its support");
                (t.to_f64_lossy() + shift, s.to_f64_lossy())
            })
            .collect();
        if let Some(out) = finish(rows, theta_star, psi_hat, source, &mut rng) {
            return out;
        }
    }
    Err(Error::InvalidConfig(format!(
        "jitter {delta} keeps producing colliding times"
    )))
}

/// Original times plus `extra_n` new ones at `max(T) + Unif{1..window} +
/// micro * Unif[-1, 1]`, with values regenerated at every time. New
/// observations take sigmas drawn uniformly from the observed ones.
pub fn synth_augment<T: Real>(
    ts: &TimeSeries<T>,
    design: &ObservationDesign,
    theta_star: f64,
    psi_hat: &HarmonicParams<T>,
    source: SigmaSource,
    key: &RngKey,
) -> Result<TimeSeries<T>> {
    design.validate()?;
    check_theta(theta_star)?;
    let last = ts.times()[ts.len() - 1].to_f64_lossy();
    let base: Vec<(f64, f64)> = ts
        .times()
        .iter()
        .zip(ts.sigmas())
        .map(|(&t, &s)| (t.to_f64_lossy(), s.to_f64_lossy()))
        .collect();
    let mut rng = key.rng();
    for _ in 0..MAX_REDRAWS {
        let mut rows = base.clone();
        for _ in 0..design.extra_n {
            let day = rng.random_range(1..=design.window_days) as f64;
            let u: f64 = rng.random_range(-1.0..=1.0);
            let s = base[rng.random_range(0..base.len())].1;
            rows.push((last + day + design.micro_jitter * u, s));
        }
        if let Some(out) = finish(rows, theta_star, psi_hat, source, &mut rng) {
            return out;
        }
    }
    Err(Error::InvalidConfig(format!(
        "{} extra observations in {} days keep colliding",
        design.extra_n, design.window_days
    )))
}

/// Synthetic dataset for any design.
pub fn synthesize<T: Real>(
    ts: &TimeSeries<T>,
    design: &ObservationDesign,
    theta_star: f64,
    psi_hat: &HarmonicParams<T>,
    source: SigmaSource,
    key: &RngKey,
) -> Result<TimeSeries<T>> {
    match design.kind {
        DesignKind::Jitter => synth_jitter(ts, design.delta, theta_star, psi_hat, source, key),
        DesignKind::Augment => synth_augment(ts, design, theta_star, psi_hat, source, key),
    }
}

/// Number of accepted periods farther than `tol_eps` from `theta_star`.
///
/// When a nuisance period is given, `tol_eps` must be smaller than its
/// distance from `theta_star`, or the count could not see the nuisance.
pub fn identification_count<T: Real>(
    cs: &ConfidenceSet<T>,
    theta_star: f64,
    tol_eps: f64,
    nuisance: Option<f64>,
) -> Result<usize> {
    check_tolerance(theta_star, tol_eps, nuisance)?;
    Ok(cs
        .accepted
        .iter()
        .filter(|&&t| (t.to_f64_lossy() - theta_star).abs() > tol_eps)
        .count())
}

fn check_tolerance(theta_star: f64, tol_eps: f64, nuisance: Option<f64>) -> Result<()> {
    if !(tol_eps > 0.0 && tol_eps.is_finite()) {
        return Err(Error::BadTolerance(format!("tol_eps must be > 0, got {tol_eps}")));
    }
    if let Some(nu) = nuisance {
        if tol_eps >= (theta_star - nu).abs() {
            return Err(Error::BadTolerance(format!(
                "tol_eps {tol_eps} does not separate {theta_star} from nuisance period {nu}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DesignOptions<T> {
    /// Grid every synthetic dataset is re-analysed on.
    pub grid: PeriodGrid<T>,
    pub cfg: InferenceConfig,
    pub candidates: Candidates,
    pub r_design: u64,
    pub tol_eps: f64,
    pub nuisance: Option<f64>,
    pub sigma_source: SigmaSource,
}

impl<T: Real> DesignOptions<T> {
    pub fn new(grid: PeriodGrid<T>, cfg: InferenceConfig) -> Self {
        Self {
            grid,
            cfg,
            candidates: Candidates::Peaks,
            r_design: 100,
            tol_eps: 0.1,
            nuisance: None,
            sigma_source: SigmaSource::Observed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub design: ObservationDesign,
    pub complexity: f64,
    /// `I` per synthetic replicate; `None` where the replicate failed.
    pub failures: Vec<Option<usize>>,
    /// Sum of `I` over the replicates that ran.
    pub total: usize,
    pub errors: Vec<String>,
}

impl DesignRow {
    /// Zero failures on every replicate, and every replicate ran.
    pub fn identifies(&self) -> bool {
        self.errors.is_empty() && self.total == 0
    }

    pub fn mean_failures(&self) -> f64 {
        let ran: Vec<usize> = self.failures.iter().flatten().copied().collect();
        if ran.is_empty() {
            return f64::NAN;
        }
        ran.iter().sum::<usize>() as f64 / ran.len() as f64
    }

    /// Standard error of `mean_failures`.
    pub fn failure_se(&self) -> f64 {
        let ran: Vec<f64> = self.failures.iter().flatten().map(|&x| x as f64).collect();
        let k = ran.len() as f64;
        if k < 2.0 {
            return f64::NAN;
        }
        let m = ran.iter().sum::<f64>() / k;
        let var = ran.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub theta_hat: f64,
    pub tol_eps: f64,
    pub r_design: u64,
    pub alpha: f64,
    pub rows: Vec<DesignRow>,
    /// Simplest identifying jitter design, if any.
    pub best_jitter: Option<ObservationDesign>,
    /// Simplest identifying augmentation design, if any.
    pub best_augment: Option<ObservationDesign>,
}

impl DesignReport {
    pub fn best(&self, kind: DesignKind) -> Option<ObservationDesign> {
        match kind {
            DesignKind::Jitter => self.best_jitter,
            DesignKind::Augment => self.best_augment,
        }
    }

    /// Per-design rows as CSV.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("kind,parameter,complexity,total,mean,errors,failures\n");
        for r in &self.rows {
            let kind = match r.design.kind {
                DesignKind::Jitter => "jitter",
                DesignKind::Augment => "augment",
            };
            let failures: Vec<String> = r
                .failures
                .iter()
                .map(|f| f.map_or_else(|| "NA".to_string(), |x| x.to_string()))
                .collect();
            let _ = writeln!(
                out,
                "{kind},{},{},{},{},{},{}",
                r.design.complexity(),
                r.complexity,
                r.total,
                r.mean_failures(),
                r.errors.len(),
                failures.join(" ")
            );
        }
        out
    }

    /// One-row summary: best `delta`, the same in hours, best `n' - n`.
    /// Kinds without an identifying design are `NA`.
    pub fn summary_csv(&self) -> String {
        let delta = self.best_jitter.map(|d| d.delta);
        let fmt = |v: Option<String>| v.unwrap_or_else(|| "NA".to_string());
        format!(
            "theta_hat,best_delta,plus_minus_hours,best_extra_n\n{},{},{},{}\n",
            self.theta_hat,
            fmt(delta.map(|d| d.to_string())),
            fmt(delta.map(|d| (d * 24.0).to_string())),
            fmt(self.best_augment.map(|d| d.extra_n.to_string())),
        )
    }
}

/// Simplest design of `kind` among rows that identify; earlier rows win ties.
pub fn select_best(rows: &[DesignRow], kind: DesignKind) -> Option<ObservationDesign> {
    rows.iter()
        .filter(|r| r.design.kind == kind && r.identifies())
        .fold(None::<&DesignRow>, |best, r| match best {
            Some(b) if b.complexity <= r.complexity => Some(b),
            _ => Some(r),
        })
        .map(|r| r.design)
}

/// One synthetic replicate of one design: `I` for that dataset.
pub fn design_replicate<T: Real>(
    ts: &TimeSeries<T>,
    design: &ObservationDesign,
    theta_hat: f64,
    psi_hat: &HarmonicParams<T>,
    opts: &DesignOptions<T>,
    key: &RngKey,
) -> Result<usize> {
    let seed = key.child_seed();
    let synth = synthesize(
        ts,
        design,
        theta_hat,
        psi_hat,
        opts.sigma_source,
        &RngKey::new(seed, StreamContext::DesignSynth),
    )?;
    let cs = confidence_set(
        &synth,
        &opts.grid,
        &opts.cfg,
        &RngKey::new(seed, StreamContext::DesignInference),
        &opts.candidates,
    )?;
    identification_count(&cs, theta_hat, opts.tol_eps, opts.nuisance)
}

/// Evaluate every design on `r_design` synthetic datasets generated at
/// `theta_hat` and pick the simplest identifying design of each kind.
/// Replicate `r` of design `d` uses `key.with_theta(d).with_replicate(r)`.
pub fn optimal_design<T: Real>(
    ts: &TimeSeries<T>,
    theta_hat: f64,
    design_space: &[ObservationDesign],
    opts: &DesignOptions<T>,
    key: &RngKey,
) -> Result<DesignReport> {
    if design_space.is_empty() {
        return Err(Error::InvalidConfig("design space is empty".into()));
    }
    if opts.r_design == 0 {
        return Err(Error::InvalidConfig("r_design must be at least 1".into()));
    }
    check_theta(theta_hat)?;
    check_tolerance(theta_hat, opts.tol_eps, opts.nuisance)?;
    opts.cfg.validated()?;
    for d in design_space {
        d.validate()?;
    }
    let psi_hat = fit_harmonic(ts, T::lit(theta_hat))?.params;
    let rows: Vec<DesignRow> = design_space
        .par_iter()
        .enumerate()
        .map(|(di, design)| {
            let results: Vec<Result<usize>> = (0..opts.r_design)
                .into_par_iter()
                .map(|r| {
                    let k = key.with_theta(di as u64).with_replicate(r);
                    design_replicate(ts, design, theta_hat, &psi_hat, opts, &k)
                })
                .collect();
            let mut errors = Vec::new();
            let failures = results
                .into_iter()
                .enumerate()
                .map(|(r, res)| match res {
                    Ok(i) => Some(i),
                    Err(e) => {
                        errors.push(format!("replicate {r}: {e}"));
                        None
                    }
                })
                .collect::<Vec<_>>();
            DesignRow {
                design: *design,
                complexity: design.complexity(),
                total: failures.iter().flatten().sum(),
                failures,
                errors,
            }
        })
        .collect();
    Ok(DesignReport {
        theta_hat,
        tol_eps: opts.tol_eps,
        r_design: opts.r_design,
        alpha: opts.cfg.alpha,
        best_jitter: select_best(&rows, DesignKind::Jitter),
        best_augment: select_best(&rows, DesignKind::Augment),
        rows,
    })
}
