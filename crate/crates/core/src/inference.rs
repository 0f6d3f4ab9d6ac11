//! Sign-flip randomization tests for `H0: theta* = theta0` and their
//! inversion into confidence sets.
//!
//! The test statistic is the gap between the highest periodogram power and
//! the power at `theta0`. Null replicates keep the fitted harmonic at
//! `theta0` and flip the signs of the residuals. Replicate `i` for grid
//! index `k` always draws from the stream `key.with_theta(k).with_replicate(i)`,
//! so results do not depend on how work is scheduled.

use std::fmt::Write as _;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Scratch, SpectralBasis};
use crate::config::{InferenceConfig, PValueEstimator};
use crate::error::{Error, Result};
use crate::harmonic::{baseline_loss, fitted_values, phase_trig, FitResult, HarmonicParams};
use crate::periodogram::{argmax, find_peak_indices, periodogram_from_basis, PeriodGrid, Periodogram};
use crate::rng::{fill_signs, RngKey, SignPattern};
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Largest series for which all `2^n` sign patterns are enumerated.
pub const MAX_ENUMERATION_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMode {
    /// Plug-in least-squares fit at `theta0`, profiled periodogram.
    Parametric,
    /// Fixed `(theta0, psi0)`, oracle periodogram.
    FullNull,
    /// Within-class permutations of the values.
    Nonparametric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TestOutcome<T> {
    pub theta0: T,
    pub s_obs: T,
    pub p_value: f64,
    pub exceedances: u64,
    pub replicates: u64,
    pub estimator: PValueEstimator,
    pub mode: TestMode,
}

impl<T: Real> TestOutcome<T> {
    pub(crate) fn new(
        theta0: T,
        s_obs: T,
        exceedances: u64,
        replicates: u64,
        estimator: PValueEstimator,
        mode: TestMode,
    ) -> Self {
        Self {
            theta0,
            s_obs,
            p_value: estimator.estimate(exceedances, replicates),
            exceedances,
            replicates,
            estimator,
            mode,
        }
    }

    /// Binomial standard error of the plug-in mean at this p-value.
    pub fn standard_error(&self) -> f64 {
        let p = self.exceedances as f64 / self.replicates as f64;
        (p * (1.0 - p) / self.replicates as f64).sqrt()
    }
}

/// `max over grid of profiled power - profiled power at theta0`, with
/// `theta0` inserted into the grid when it is not already a grid point.
pub fn test_statistic<T: Real>(ts: &TimeSeries<T>, grid: &PeriodGrid<T>, theta0: T) -> Result<T> {
    let (periods, k0) = grid.with_point(theta0)?;
    let pg = crate::periodogram::compute_periodogram(ts, &PeriodGrid::explicit(periods)?)?;
    Ok(pg.max_power() - pg.power[k0])
}

/// One null replicate: the fitted curve plus sign-flipped residuals.
///
/// Coordinates with a `+1` sign are copied from the input unchanged, so the
/// identity pattern reproduces the input exactly.
pub fn synthesize_null_sample<T: Real>(
    ts: &TimeSeries<T>,
    theta0: T,
    fit: &FitResult<T>,
    pattern: &SignPattern,
) -> Result<TimeSeries<T>> {
    if pattern.len() != ts.len() {
        return Err(Error::LengthMismatch {
            expected: ts.len(),
            found: pattern.len(),
        });
    }
    if fit.theta != theta0 {
        return Err(Error::InvalidConfig(format!(
            "fit was computed at period {} but the null is {}",
            fit.theta, theta0
        )));
    }
    let fitted = fitted_values(ts, theta0, &fit.params)?;
    let values = ts
        .values()
        .iter()
        .zip(&fitted)
        .enumerate()
        .map(|(i, (&y, &f))| if pattern.is_negative(i) { f - (y - f) } else { y })
        .collect();
    ts.with_values(values)
}

#[inline]
fn flip_into<T: Real>(observed: &[T], fitted: &[T], signs: &[i8], out: &mut [T]) {
    for i in 0..observed.len() {
        out[i] = if signs[i] < 0 {
            fitted[i] - (observed[i] - fitted[i])
        } else {
            observed[i]
        };
    }
}

/// Precomputed state for testing many `theta0` on one series and grid.
#[derive(Debug, Clone)]
pub struct RandomizationEngine<'a, T> {
    ts: &'a TimeSeries<T>,
    basis: SpectralBasis<T>,
    observed: Vec<T>,
}

impl<'a, T: Real> RandomizationEngine<'a, T> {
    pub fn new(ts: &'a TimeSeries<T>, periods: &[T]) -> Result<Self> {
        if !(baseline_loss(ts) > T::zero()) {
            return Err(Error::DegenerateBaseline);
        }
        if ts.len() < 3 {
            return Err(Error::TooFewObservations {
                required: 3,
                found: ts.len(),
            });
        }
        let basis = SpectralBasis::for_series(ts, periods)?;
        let observed = basis.profiled_powers_par(ts.values());
        Ok(Self { ts, basis, observed })
    }

    pub fn basis(&self) -> &SpectralBasis<T> {
        &self.basis
    }

    /// Observed profiled periodogram on the engine's periods.
    pub fn observed_powers(&self) -> &[T] {
        &self.observed
    }

    pub fn periodogram(&self) -> Result<Periodogram<T>> {
        let grid = PeriodGrid::explicit(self.basis.periods().to_vec())?;
        Ok(periodogram_from_basis(&self.basis, &grid, self.ts.values()))
    }

    pub fn observed_statistic(&self, k0: usize) -> T {
        self.observed[argmax(&self.observed)] - self.observed[k0]
    }

    /// Least-squares fit and fitted values at grid index `k0`.
    pub fn null_fit(&self, k0: usize) -> Result<(HarmonicParams<T>, Vec<T>)> {
        let theta0 = self.basis.periods()[k0];
        let params = self
            .basis
            .fit_params(k0, self.ts.values())
            .ok_or_else(|| Error::SingularDesign {
                theta: theta0.to_f64_lossy(),
                condition: self.basis.condition(k0).to_f64_lossy(),
            })?;
        let fitted = self
            .ts
            .times()
            .iter()
            .map(|&t| {
                let (c, s) = phase_trig(t, theta0);
                params.eval_trig(c, s)
            })
            .collect();
        Ok((params, fitted))
    }

    /// Monte Carlo randomization test at grid index `k0`.
    pub fn test(&self, k0: usize, cfg: &InferenceConfig, key: &RngKey) -> Result<TestOutcome<T>> {
        let (_, fitted) = self.null_fit(k0)?;
        let s_obs = self.observed_statistic(k0);
        let n = self.ts.len();
        let y = self.ts.values();
        let key = key.with_theta(k0 as u64);
        let exceed: u64 = (0..cfg.replicates)
            .into_par_iter()
            .map_init(
                || (vec![1i8; n], vec![T::zero(); n], Scratch::new(&self.basis)),
                |(signs, buf, scratch), i| {
                    fill_signs(&mut key.with_replicate(i).rng(), signs);
                    flip_into(y, &fitted, signs, buf);
                    u64::from(self.basis.profiled_gap(buf, k0, scratch) >= s_obs)
                },
            )
            .sum();
        Ok(TestOutcome::new(
            self.basis.periods()[k0],
            s_obs,
            exceed,
            cfg.replicates,
            cfg.pvalue_estimator,
            TestMode::Parametric,
        ))
    }

    /// Exact p-value over all `2^n` sign patterns at grid index `k0`.
    pub fn exact(&self, k0: usize) -> Result<Ratio<u64>> {
        let n = self.ts.len();
        if n > MAX_ENUMERATION_N {
            return Err(Error::TooLarge {
                size: 1u128 << n,
                limit: 1u128 << MAX_ENUMERATION_N,
            });
        }
        let (_, fitted) = self.null_fit(k0)?;
        let s_obs = self.observed_statistic(k0);
        let y = self.ts.values();
        let total = 1u64 << n;
        let count: u64 = (0..total)
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); n], Scratch::new(&self.basis)),
                |(buf, scratch), bits| {
                    let pattern = SignPattern::from_bits(bits, n);
                    flip_into(y, &fitted, pattern.signs(), buf);
                    u64::from(self.basis.profiled_gap(buf, k0, scratch) >= s_obs)
                },
            )
            .sum();
        Ok(Ratio::new(count, total))
    }
}

/// Monte Carlo p-value for `H0: theta* = theta0` with the least-squares
/// nuisance estimate plugged in.
pub fn randomization_pvalue<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    cfg: &InferenceConfig,
    key: &RngKey,
) -> Result<TestOutcome<T>> {
    let cfg = cfg.validated()?;
    let (periods, k0) = grid.with_point(theta0)?;
    let engine = RandomizationEngine::new(ts, &periods)?;
    let mut outcome = engine.test(k0, &cfg, &key.with_theta(key.theta_index))?;
    outcome.theta0 = theta0;
    Ok(outcome)
}

/// Exact sign-flip p-value: the fraction of all `2^n` patterns (identity
/// included) whose statistic is at least the observed one. `n <= 16`.
pub fn exact_pvalue_enumeration<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
) -> Result<Ratio<u64>> {
    if ts.len() > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            size: 1u128 << ts.len(),
            limit: 1u128 << MAX_ENUMERATION_N,
        });
    }
    let (periods, k0) = grid.with_point(theta0)?;
    RandomizationEngine::new(ts, &periods)?.exact(k0)
}

struct FullNullSetup<T> {
    basis: SpectralBasis<T>,
    k0: usize,
    fitted: Vec<T>,
    s_obs: T,
}

fn full_null_setup<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    psi0: &HarmonicParams<T>,
) -> Result<FullNullSetup<T>> {
    if !(baseline_loss(ts) > T::zero()) {
        return Err(Error::DegenerateBaseline);
    }
    let (periods, k0) = grid.with_point(theta0)?;
    let basis = SpectralBasis::for_series(ts, &periods)?;
    let fitted = fitted_values(ts, theta0, psi0)?;
    let s_obs = basis.oracle_gap(ts.values(), psi0, k0, &mut Scratch::new(&basis));
    Ok(FullNullSetup {
        basis,
        k0,
        fitted,
        s_obs,
    })
}

/// Monte Carlo p-value for the full null `theta* = theta0, psi* = psi0`,
/// using the oracle periodogram at fixed `psi0`.
pub fn full_null_pvalue<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    psi0: &HarmonicParams<T>,
    cfg: &InferenceConfig,
    key: &RngKey,
) -> Result<TestOutcome<T>> {
    let cfg = cfg.validated()?;
    let setup = full_null_setup(ts, grid, theta0, psi0)?;
    let n = ts.len();
    let y = ts.values();
    let exceed: u64 = (0..cfg.replicates)
        .into_par_iter()
        .map_init(
            || (vec![1i8; n], vec![T::zero(); n], Scratch::new(&setup.basis)),
            |(signs, buf, scratch), i| {
                fill_signs(&mut key.with_replicate(i).rng(), signs);
                flip_into(y, &setup.fitted, signs, buf);
                u64::from(setup.basis.oracle_gap(buf, psi0, setup.k0, scratch) >= setup.s_obs)
            },
        )
        .sum();
    Ok(TestOutcome::new(
        theta0,
        setup.s_obs,
        exceed,
        cfg.replicates,
        cfg.pvalue_estimator,
        TestMode::FullNull,
    ))
}

/// Exact full-null p-value over all `2^n` sign patterns. `n <= 16`.
pub fn exact_full_null_enumeration<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    theta0: T,
    psi0: &HarmonicParams<T>,
) -> Result<Ratio<u64>> {
    let n = ts.len();
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            size: 1u128 << n,
            limit: 1u128 << MAX_ENUMERATION_N,
        });
    }
    let setup = full_null_setup(ts, grid, theta0, psi0)?;
    let y = ts.values();
    let total = 1u64 << n;
    let count: u64 = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![T::zero(); n], Scratch::new(&setup.basis)),
            |(buf, scratch), bits| {
                let pattern = SignPattern::from_bits(bits, n);
                flip_into(y, &setup.fitted, pattern.signs(), buf);
                u64::from(setup.basis.oracle_gap(buf, psi0, setup.k0, scratch) >= setup.s_obs)
            },
        )
        .sum();
    Ok(Ratio::new(count, total))
}

/// Which grid points are tested when building a confidence set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidates {
    /// Every grid point.
    AllGrid,
    /// Periodogram peaks at least `gamma` times the highest; everything
    /// else is reported as not tested and left out of the set.
    Peaks,
    /// Specific grid indices (deduplicated, tested in increasing order).
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConfidenceEntry<T> {
    pub grid_index: usize,
    pub theta0: T,
    pub outcome: Option<TestOutcome<T>>,
    /// Why the period could not be tested (e.g. singular design).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub untestable: Option<String>,
}

impl<T: Real> ConfidenceEntry<T> {
    pub fn p_value(&self) -> Option<f64> {
        self.outcome.as_ref().map(|o| o.p_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConfidenceSet<T> {
    pub alpha: f64,
    pub candidates: Candidates,
    pub grid_len: usize,
    /// Grid points that were not tested and are therefore excluded.
    pub not_tested: usize,
    pub observed_argmax: T,
    pub entries: Vec<ConfidenceEntry<T>>,
    /// Periods with `p > alpha`, increasing.
    pub accepted: Vec<T>,
}

impl<T: Real> ConfidenceSet<T> {
    /// Tested periods with `p > alpha`. Untestable periods never qualify.
    pub fn accepted_at(&self, alpha: f64) -> Vec<T> {
        self.entries
            .iter()
            .filter(|e| e.p_value().is_some_and(|p| p > alpha))
            .map(|e| e.theta0)
            .collect()
    }

    pub fn contains(&self, theta: T) -> bool {
        self.accepted.iter().any(|&a| a == theta)
    }

    pub fn untestable(&self) -> impl Iterator<Item = &ConfidenceEntry<T>> {
        self.entries.iter().filter(|e| e.untestable.is_some())
    }

    /// `theta0,pvalue,in_95,in_99` table, one row per tested period.
    pub fn to_table_csv(&self) -> String {
        let mut out = String::from("theta0,pvalue,in_95,in_99\n");
        let yes = |b: bool| if b { "yes" } else { "no" };
        for e in &self.entries {
            match e.p_value() {
                Some(p) => {
                    let _ = writeln!(out, "{},{},{},{}", e.theta0, p, yes(p > 0.05), yes(p > 0.01));
                }
                None => {
                    let _ = writeln!(out, "{},NA,no,no", e.theta0);
                }
            }
        }
        out
    }
}

/// Invert the randomization test over the candidate periods of `grid`.
/// Failures at individual periods are recorded and never abort the rest.
pub fn confidence_set<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
    cfg: &InferenceConfig,
    key: &RngKey,
    candidates: &Candidates,
) -> Result<ConfidenceSet<T>> {
    let cfg = cfg.validated()?;
    let engine = RandomizationEngine::new(ts, grid.periods())?;
    confidence_set_with_engine(&engine, &cfg, key, candidates)
}

pub fn confidence_set_with_engine<T: Real>(
    engine: &RandomizationEngine<'_, T>,
    cfg: &InferenceConfig,
    key: &RngKey,
    candidates: &Candidates,
) -> Result<ConfidenceSet<T>> {
    let periods = engine.basis().periods();
    let observed = engine.observed_powers();
    let indices: Vec<usize> = match candidates {
        Candidates::AllGrid => (0..periods.len()).collect(),
        Candidates::Peaks => find_peak_indices(observed, T::lit(cfg.peak_filter_gamma)),
        Candidates::Indices(ix) => {
            let mut ix = ix.clone();
            ix.sort_unstable();
            ix.dedup();
            if let Some(&bad) = ix.iter().find(|&&i| i >= periods.len()) {
                return Err(Error::InvalidConfig(format!(
                    "candidate index {bad} outside grid of {}",
                    periods.len()
                )));
            }
            ix
        }
    };
    let entries: Vec<ConfidenceEntry<T>> = indices
        .par_iter()
        .map(|&k| {
            let theta0 = periods[k];
            match engine.test(k, cfg, key) {
                Ok(outcome) => ConfidenceEntry {
                    grid_index: k,
                    theta0,
                    outcome: Some(outcome),
                    untestable: None,
                },
                Err(e) => ConfidenceEntry {
                    grid_index: k,
                    theta0,
                    outcome: None,
                    untestable: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut set = ConfidenceSet {
        alpha: cfg.alpha,
        candidates: candidates.clone(),
        grid_len: periods.len(),
        not_tested: periods.len() - indices.len(),
        observed_argmax: periods[argmax(observed)],
        entries,
        accepted: Vec::new(),
    };
    set.accepted = set.accepted_at(cfg.alpha);
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::fit_harmonic;
    use crate::periodogram::{build_log_grid, compute_periodogram};
    use crate::rng::{sample_sign_pattern, StreamContext};

    fn noisy(n: usize, theta: f64, amp: f64, seed: u64) -> TimeSeries<f64> {
        use rand::Rng;
        let mut rng = RngKey::new(seed, StreamContext::Custom).rng();
        let mut t = 0.0;
        let mut times = Vec::new();
        for _ in 0..n {
            t += 0.3 + rng.random::<f64>();
            times.push(t);
        }
        let values = times
            .iter()
            .map(|&t| amp * (std::f64::consts::TAU * t / theta).cos() + rng.random::<f64>() - 0.5)
            .collect();
        TimeSeries::new(times, values, vec![1.0; n]).unwrap()
    }

    fn key() -> RngKey {
        RngKey::new(42, StreamContext::SignFlip)
    }

    #[test]
    fn statistic_zero_at_argmax() {
        let ts = noisy(30, 2.7, 1.0, 1);
        let grid = build_log_grid(0.8, 12.0, 400).unwrap();
        let pg = compute_periodogram(&ts, &grid).unwrap();
        let top = grid.periods()[pg.argmax()];
        assert_eq!(test_statistic(&ts, &grid, top).unwrap(), 0.0);
        let other = grid.periods()[10];
        let s = test_statistic(&ts, &grid, other).unwrap();
        assert_eq!(s, pg.max_power() - pg.power[10]);
    }

    #[test]
    fn statistic_off_grid_inserts_point() {
        let ts = noisy(30, 2.7, 1.0, 2);
        let grid = build_log_grid(0.8, 12.0, 50).unwrap();
        let s = test_statistic(&ts, &grid, 2.7).unwrap();
        assert!(s >= 0.0);
    }

    #[test]
    fn null_sample_identity_and_involution() {
        let ts = noisy(12, 2.7, 1.0, 3);
        let fit = fit_harmonic(&ts, 2.7).unwrap();
        let same = synthesize_null_sample(&ts, 2.7, &fit, &SignPattern::identity(12)).unwrap();
        assert_eq!(same, ts);
        let flipped = synthesize_null_sample(&ts, 2.7, &fit, &SignPattern::negation(12)).unwrap();
        let back = synthesize_null_sample(&flipped, 2.7, &fit, &SignPattern::negation(12)).unwrap();
        for (a, b) in back.values().iter().zip(ts.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(back.times(), ts.times());
        assert_eq!(back.sigmas(), ts.sigmas());
        assert!(matches!(
            synthesize_null_sample(&ts, 2.7, &fit, &SignPattern::identity(3)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn null_sample_zero_residuals() {
        let times: Vec<f64> = (0..9).map(|i| i as f64 * 1.1).collect();
        let ts = TimeSeries::new(times, vec![2.0; 9], vec![1.0; 9]).unwrap();
        let fit = fit_harmonic(&ts, 3.3).unwrap();
        for r in 0..5 {
            let p = sample_sign_pattern(9, &key().with_replicate(r));
            let out = synthesize_null_sample(&ts, 3.3, &fit, &p).unwrap();
            for (a, b) in out.values().iter().zip(ts.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pvalue_one_at_peak() {
        let ts = noisy(25, 3.1, 0.8, 4);
        let grid = build_log_grid(0.7, 15.0, 300).unwrap();
        let pg = compute_periodogram(&ts, &grid).unwrap();
        let cfg = InferenceConfig::new(0.05, 200).unwrap();
        let out = randomization_pvalue(&ts, &grid, grid.periods()[pg.argmax()], &cfg, &key()).unwrap();
        assert_eq!(out.s_obs, 0.0);
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.exceedances, 200);
    }

    #[test]
    fn add_one_lower_bound() {
        let ts = noisy(40, 3.1, 3.0, 5);
        let grid = build_log_grid(0.7, 15.0, 300).unwrap();
        let cfg = InferenceConfig::new(0.05, 99).unwrap();
        let out = randomization_pvalue(&ts, &grid, 0.9, &cfg, &key()).unwrap();
        assert!(out.p_value >= 0.01 && out.p_value <= 1.0);
        let mean_cfg = cfg.with_estimator(PValueEstimator::PlugInMean);
        let out2 = randomization_pvalue(&ts, &grid, 0.9, &mean_cfg, &key()).unwrap();
        assert_eq!(out.exceedances, out2.exceedances);
    }

    #[test]
    fn degenerate_and_singular() {
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0; 4], vec![1.0; 4]).unwrap();
        let grid = PeriodGrid::explicit(vec![1.5, 2.5]).unwrap();
        let cfg = InferenceConfig::new(0.05, 10).unwrap();
        assert_eq!(
            randomization_pvalue(&ts, &grid, 1.5, &cfg, &key()).unwrap_err(),
            Error::DegenerateBaseline
        );
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 0.5, 3.0, 1.0], vec![1.0; 5]).unwrap();
        let grid = PeriodGrid::explicit(vec![1.0, 2.5]).unwrap();
        assert!(matches!(
            randomization_pvalue(&ts, &grid, 1.0, &cfg, &key()),
            Err(Error::SingularDesign { .. })
        ));
        let cs = confidence_set(&ts, &grid, &cfg, &key(), &Candidates::AllGrid).unwrap();
        assert_eq!(cs.entries.len(), 2);
        assert!(cs.entries[0].untestable.is_some());
        assert!(!cs.contains(1.0));
    }

    #[test]
    fn exact_enumeration_two_points_of_four() {
        // Hand check on n = 3 would need a 3-parameter fit with zero
        // residuals; the smallest informative case is covered in the
        // integration tests. Here: zero residuals give exactly 1.
        let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.9 + 0.1 * (i * i) as f64).collect();
        let values: Vec<f64> = times.iter().map(|&t| (std::f64::consts::TAU * t / 2.2).sin()).collect();
        let ts = TimeSeries::new(times, values, vec![1.0; 6]).unwrap();
        let grid = build_log_grid(0.8, 6.0, 200).unwrap();
        let p = exact_pvalue_enumeration(&ts, &grid, 2.2).unwrap();
        assert_eq!(p, Ratio::new(1, 1));
    }

    #[test]
    fn enumeration_size_limit() {
        let ts = noisy(17, 2.0, 1.0, 6);
        let grid = build_log_grid(0.8, 6.0, 10).unwrap();
        assert!(matches!(
            exact_pvalue_enumeration(&ts, &grid, 2.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn full_null_exact_fit_gives_one() {
        let psi = HarmonicParams::new(0.5, 1.0, -0.3);
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.83 + 0.05 * (i as f64).cos()).collect();
        let values = fitted_values(
            &TimeSeries::new(times.clone(), vec![0.0; 20], vec![1.0; 20]).unwrap(),
            3.0,
            &psi,
        )
        .unwrap();
        let ts = TimeSeries::new(times, values, vec![1.0; 20]).unwrap();
        let grid = build_log_grid(0.8, 10.0, 200).unwrap();
        let cfg = InferenceConfig::new(0.05, 100).unwrap();
        let out = full_null_pvalue(&ts, &grid, 3.0, &psi, &cfg, &key()).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert_eq!(out.mode, TestMode::FullNull);
    }

    #[test]
    fn confidence_set_contains_argmax_and_is_nested() {
        let ts = noisy(30, 2.2, 0.6, 7);
        let grid = build_log_grid(0.7, 10.0, 250).unwrap();
        let cfg = InferenceConfig::new(0.05, 200).unwrap();
        let cs = confidence_set(&ts, &grid, &cfg, &key(), &Candidates::Peaks).unwrap();
        assert!(cs.contains(cs.observed_argmax));
        let wide = cs.accepted_at(0.01);
        let narrow = cs.accepted_at(0.05);
        assert!(narrow.iter().all(|t| wide.contains(t)));
        assert_eq!(cs.not_tested + cs.entries.len(), grid.len());
        let csv = cs.to_table_csv();
        assert!(csv.starts_with("theta0,pvalue,in_95,in_99\n"));
        assert_eq!(csv.lines().count(), cs.entries.len() + 1);
    }

    #[test]
    fn peaks_mode_matches_all_grid_on_shared_points() {
        let ts = noisy(20, 2.2, 0.6, 8);
        let grid = build_log_grid(0.7, 10.0, 60).unwrap();
        let cfg = InferenceConfig::new(0.05, 50).unwrap();
        let peaks = confidence_set(&ts, &grid, &cfg, &key(), &Candidates::Peaks).unwrap();
        let all = confidence_set(&ts, &grid, &cfg, &key(), &Candidates::AllGrid).unwrap();
        for e in &peaks.entries {
            assert_eq!(all.entries[e.grid_index], *e);
        }
    }
}
