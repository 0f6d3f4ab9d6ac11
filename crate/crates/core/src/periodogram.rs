//! Generalized (least-squares) periodograms over a grid of trial periods.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::harmonic::{baseline_loss, check_period, fit_harmonic, loss, HarmonicParams};
use crate::scalar::Real;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridSpacing {
    LogUniform,
    Explicit,
}

/// Strictly increasing positive trial periods, in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PeriodGrid<T> {
    periods: Vec<T>,
    spacing: GridSpacing,
}

impl<T: Real> PeriodGrid<T> {
    pub fn explicit(periods: Vec<T>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::BadRange("period grid is empty".into()));
        }
        for (i, &p) in periods.iter().enumerate() {
            check_period(p)?;
            if i > 0 && p <= periods[i - 1] {
                return Err(Error::BadRange("periods must be strictly increasing".into()));
            }
        }
        Ok(Self {
            periods,
            spacing: GridSpacing::Explicit,
        })
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn spacing(&self) -> GridSpacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Index of an exact grid match.
    pub fn position(&self, theta: T) -> Option<usize> {
        self.periods
            .binary_search_by(|p| p.partial_cmp(&theta).unwrap_or(std::cmp::Ordering::Less))
            .ok()
    }

    /// Index of the grid point closest to `theta` (ties to the smaller period).
    pub fn nearest(&self, theta: T) -> usize {
        let mut best = 0;
        for (i, &p) in self.periods.iter().enumerate() {
            if (p - theta).abs() < (self.periods[best] - theta).abs() {
                best = i;
            }
        }
        best
    }

    /// The grid with `theta` inserted if absent, and the index of `theta`.
    pub fn with_point(&self, theta: T) -> Result<(Vec<T>, usize)> {
        check_period(theta)?;
        let idx = self.periods.partition_point(|&p| p < theta);
        if idx < self.len() && self.periods[idx] == theta {
            return Ok((self.periods.clone(), idx));
        }
        let mut periods = Vec::with_capacity(self.len() + 1);
        periods.extend_from_slice(&self.periods[..idx]);
        periods.push(theta);
        periods.extend_from_slice(&self.periods[idx..]);
        Ok((periods, idx))
    }
}

/// `count` geometrically spaced periods from `theta_min` to `theta_max`,
/// both endpoints included.
pub fn build_log_grid<T: Real>(theta_min: T, theta_max: T, count: usize) -> Result<PeriodGrid<T>> {
    if !(theta_min.is_finite() && theta_max.is_finite() && theta_min > T::zero() && theta_min < theta_max) {
        return Err(Error::BadRange(format!(
            "need 0 < theta_min < theta_max, got [{theta_min}, {theta_max}]"
        )));
    }
    if count < 2 {
        return Err(Error::BadRange(format!("grid needs at least 2 points, got {count}")));
    }
    let lo = theta_min.ln();
    let step = (theta_max.ln() - lo) / T::from_usize(count - 1).unwrap();
    let mut periods: Vec<T> = (0..count)
        .map(|k| (lo + step * T::from_usize(k).unwrap()).exp())
        .collect();
    periods[0] = theta_min;
    periods[count - 1] = theta_max;
    if periods.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadRange(format!(
            "{count} points do not fit strictly between {theta_min} and {theta_max} at this precision"
        )));
    }
    Ok(PeriodGrid {
        periods,
        spacing: GridSpacing::LogUniform,
    })
}

/// Profiled power over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Periodogram<T> {
    pub grid: PeriodGrid<T>,
    pub power: Vec<T>,
    /// Periods where the harmonic design was singular; their power is 0.
    pub singular: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<Option<HarmonicParams<T>>>>,
}

impl<T: Real> Periodogram<T> {
    /// Index of the highest power; ties go to the smaller period.
    pub fn argmax(&self) -> usize {
        argmax(&self.power)
    }

    pub fn max_power(&self) -> T {
        self.power[self.argmax()]
    }

    pub fn singular_count(&self) -> usize {
        self.singular.iter().filter(|&&s| s).count()
    }

    /// `theta,power` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,power\n");
        for (p, a) in self.grid.periods().iter().zip(&self.power) {
            let _ = writeln!(out, "{p},{a}");
        }
        out
    }
}

pub(crate) fn argmax<T: Real>(power: &[T]) -> usize {
    let mut best = 0;
    for (i, &p) in power.iter().enumerate() {
        if p > power[best] {
            best = i;
        }
    }
    best
}

fn nondegenerate_baseline<T: Real>(ts: &TimeSeries<T>) -> Result<T> {
    let l0 = baseline_loss(ts);
    if l0 > T::zero() {
        Ok(l0)
    } else {
        Err(Error::DegenerateBaseline)
    }
}

/// `(L0 - L(theta, params)) / L0`. Negative when `params` fit worse than the
/// mean.
pub fn oracle_power<T: Real>(ts: &TimeSeries<T>, theta: T, params: &HarmonicParams<T>) -> Result<T> {
    check_period(theta)?;
    let l0 = nondegenerate_baseline(ts)?;
    Ok((l0 - loss(ts, theta, params)?) / l0)
}

/// Oracle power at the least-squares parameters; always in `[0, 1]`.
pub fn profiled_power<T: Real>(ts: &TimeSeries<T>, theta: T) -> Result<T> {
    check_period(theta)?;
    let l0 = nondegenerate_baseline(ts)?;
    let fit = fit_harmonic(ts, theta)?;
    Ok(((l0 - fit.loss) / l0).max(T::zero()).min(T::one()))
}

/// Profiled periodogram over `grid`. Periods with a singular design are
/// recorded with power 0 and flagged rather than failing the scan.
pub fn compute_periodogram<T: Real>(ts: &TimeSeries<T>, grid: &PeriodGrid<T>) -> Result<Periodogram<T>> {
    nondegenerate_baseline(ts)?;
    if ts.len() < 3 {
        return Err(Error::TooFewObservations {
            required: 3,
            found: ts.len(),
        });
    }
    let basis = SpectralBasis::for_series(ts, grid.periods())?;
    Ok(periodogram_from_basis(&basis, grid, ts.values()))
}

pub(crate) fn periodogram_from_basis<T: Real>(
    basis: &SpectralBasis<T>,
    grid: &PeriodGrid<T>,
    values: &[T],
) -> Periodogram<T> {
    Periodogram {
        grid: grid.clone(),
        power: basis.profiled_powers_par(values),
        singular: (0..basis.len()).map(|k| basis.is_singular(k)).collect(),
        params: None,
    }
}

/// Like [`compute_periodogram`] but also keeps the per-period fits.
pub fn compute_periodogram_with_params<T: Real>(
    ts: &TimeSeries<T>,
    grid: &PeriodGrid<T>,
) -> Result<Periodogram<T>> {
    let mut pg = compute_periodogram(ts, grid)?;
    let basis = SpectralBasis::for_series(ts, grid.periods())?;
    pg.params = Some((0..grid.len()).map(|k| basis.fit_params(k, ts.values())).collect());
    Ok(pg)
}

/// Indices of local maxima whose power is at least `gamma` times the
/// highest, in increasing period order.
///
/// A point is a peak when it is strictly higher than both neighbours (one
/// neighbour at the boundaries). The global argmax (smallest index among
/// ties) is always included.
pub fn find_peak_indices<T: Real>(power: &[T], gamma: T) -> Vec<usize> {
    let len = power.len();
    if len == 0 {
        return Vec::new();
    }
    let top = argmax(power);
    let threshold = gamma * power[top];
    (0..len)
        .filter(|&i| {
            if i == top {
                return true;
            }
            let left = i == 0 || power[i] > power[i - 1];
            let right = i + 1 == len || power[i] > power[i + 1];
            left && right && power[i] >= threshold
        })
        .collect()
}

/// Periods of the peaks selected by [`find_peak_indices`].
pub fn find_peaks<T: Real>(pg: &Periodogram<T>, gamma: T) -> Vec<T> {
    find_peak_indices(&pg.power, gamma)
        .into_iter()
        .map(|i| pg.grid.periods()[i])
        .collect()
}

/// Highest power divided by mean power.
pub fn fisher_statistic<T: Real>(power: &[T]) -> Result<T> {
    if power.is_empty() {
        return Err(Error::ZeroMeanPower);
    }
    let mean = power.iter().copied().sum::<T>() / T::from_usize(power.len()).unwrap();
    if !(mean > T::zero()) {
        return Err(Error::ZeroMeanPower);
    }
    Ok(power[argmax(power)] / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_examples() {
        let g = build_log_grid(1.0f64, 100.0, 3).unwrap();
        assert_eq!(g.periods()[0], 1.0);
        assert!((g.periods()[1] - 10.0).abs() < 1e-12);
        assert_eq!(g.periods()[2], 100.0);
        assert_eq!(build_log_grid(0.1, 1000.0, 2).unwrap().periods(), &[0.1, 1000.0]);
        assert!(build_log_grid(1.0, 1.0, 3).is_err());
        assert!(build_log_grid(0.0, 1.0, 3).is_err());
        assert!(build_log_grid(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn log_grid_ratio_constant() {
        let g = build_log_grid(0.1f64, 1000.0, 25_000).unwrap();
        assert_eq!(g.len(), 25_000);
        let p = g.periods();
        let r0 = p[1] / p[0];
        for w in p.windows(2) {
            assert!(((w[1] / w[0]) / r0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn peaks_examples() {
        let p = [0.1, 0.9, 0.1, 0.5, 0.1];
        assert_eq!(find_peak_indices(&p, 0.2), vec![1, 3]);
        assert_eq!(find_peak_indices(&p, 1.0), vec![1]);
        assert_eq!(find_peak_indices(&[0.1, 0.2, 0.3, 0.4], 0.2), vec![3]);
        assert_eq!(find_peak_indices(&[0.4, 0.3, 0.2], 0.2), vec![0]);
        assert_eq!(find_peak_indices(&[0.7], 0.2), vec![0]);
        // Plateau at the maximum: argmax still reported, first of the tie.
        assert_eq!(find_peak_indices(&[0.1, 0.5, 0.5, 0.1], 0.5), vec![1]);
        // Exact ties between separate maxima both survive gamma = 1.
        assert_eq!(find_peak_indices(&[0.5, 0.1, 0.5], 1.0), vec![0, 2]);
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_statistic(&[0.3, 0.3, 0.3]).unwrap(), 1.0);
        assert_eq!(fisher_statistic(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 4.0);
        assert_eq!(fisher_statistic(&[0.0, 0.0]).unwrap_err(), Error::ZeroMeanPower);
    }

    #[test]
    fn with_point_inserts_in_order() {
        let g = PeriodGrid::explicit(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.with_point(2.0).unwrap(), (vec![1.0, 2.0, 4.0], 1));
        assert_eq!(g.with_point(3.0).unwrap(), (vec![1.0, 2.0, 3.0, 4.0], 2));
        assert_eq!(g.with_point(0.5).unwrap().1, 0);
        assert_eq!(g.with_point(5.0).unwrap().1, 3);
        assert_eq!(g.nearest(2.9), 1);
        assert_eq!(g.position(4.0), Some(2));
        assert_eq!(g.position(3.0), None);
        assert!(PeriodGrid::explicit(vec![1.0, 1.0]).is_err());
    }

    fn harmonic(theta: f64) -> TimeSeries<f64> {
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.61 + 0.2 * (i as f64).sin()).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 1.0 + 2.0 * (std::f64::consts::TAU * t / theta).sin())
            .collect();
        TimeSeries::new(times, values, vec![1.0; 40]).unwrap()
    }

    #[test]
    fn noiseless_peak_at_truth() {
        let ts = harmonic(3.0);
        assert!((profiled_power(&ts, 3.0).unwrap() - 1.0).abs() < 1e-9);
        let grid = build_log_grid(0.5, 20.0, 801).unwrap();
        let pg = compute_periodogram(&ts, &grid).unwrap();
        assert_eq!(pg.argmax(), grid.nearest(3.0));
        assert!(pg.power.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn oracle_power_examples() {
        let ts = harmonic(3.0);
        let truth = HarmonicParams::new(1.0, 0.0, 2.0);
        assert!((oracle_power(&ts, 3.0, &truth).unwrap() - 1.0).abs() < 1e-12);
        let mean = ts.values().iter().sum::<f64>() / ts.len() as f64;
        assert!(oracle_power(&ts, 3.0, &HarmonicParams::constant(mean)).unwrap().abs() < 1e-12);
        let flat = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(oracle_power(&flat, 1.0, &truth).unwrap_err(), Error::DegenerateBaseline);
        assert_eq!(compute_periodogram(&flat, &PeriodGrid::explicit(vec![2.0]).unwrap()).unwrap_err(), Error::DegenerateBaseline);
    }

    #[test]
    fn singleton_grid() {
        let ts = harmonic(3.0);
        let pg = compute_periodogram(&ts, &PeriodGrid::explicit(vec![2.0]).unwrap()).unwrap();
        assert_eq!(pg.power.len(), 1);
        assert!((pg.power[0] - profiled_power(&ts, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let ts = harmonic(3.0);
        let pg = compute_periodogram(&ts, &build_log_grid(1.0, 4.0, 2).unwrap()).unwrap();
        let csv = pg.to_csv();
        assert!(csv.starts_with("theta,power\n1,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
