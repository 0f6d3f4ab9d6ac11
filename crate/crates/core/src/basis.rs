//! Precomputed design columns for repeated periodogram evaluation.
//!
//! For fixed observation times, sigmas and period grid, the weighted design
//! columns and the 3x3 normal matrices do not depend on the values. A
//! periodogram of a new value vector then costs two weighted dot products
//! per period. Every randomization replicate reuses one basis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonic::{phase_trig, HarmonicParams, NormalMatrix, NormalSolver};
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Above this many stored entries the weighted trig columns are recomputed
/// on the fly instead of cached (2 * 32M f64 is 512 MiB).
const MAX_STORED_ENTRIES: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct SpectralBasis<T> {
    periods: Vec<T>,
    times: Vec<T>,
    weights: Vec<T>,
    /// Row-major `periods x n` tables of `w_i cos(phase)` and `w_i sin(phase)`.
    cos_w: Vec<T>,
    sin_w: Vec<T>,
    normals: Vec<NormalMatrix<T>>,
    solvers: Vec<Option<NormalSolver<T>>>,
    conditions: Vec<T>,
}

/// Value-dependent sums shared by every period.
#[derive(Debug, Clone, Copy)]
struct ValueSums<T> {
    sum_wy: T,
    ywy: T,
    baseline: T,
}

#[inline]
fn dot2<T: Real>(a: &[T], b: &[T], y: &[T]) -> (T, T) {
    let n = y.len();
    let mut ca = [T::zero(); 4];
    let mut cb = [T::zero(); 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        for l in 0..4 {
            ca[l] = ca[l] + a[i + l] * y[i + l];
            cb[l] = cb[l] + b[i + l] * y[i + l];
        }
    }
    let mut ra = (ca[0] + ca[1]) + (ca[2] + ca[3]);
    let mut rb = (cb[0] + cb[1]) + (cb[2] + cb[3]);
    for i in 4 * chunks..n {
        ra = ra + a[i] * y[i];
        rb = rb + b[i] * y[i];
    }
    (ra, rb)
}

impl<T: Real> SpectralBasis<T> {
    pub fn new(times: &[T], sigmas: &[T], periods: &[T]) -> Result<Self> {
        if times.len() != sigmas.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: sigmas.len(),
            });
        }
        if periods.is_empty() {
            return Err(Error::BadRange("period grid is empty".into()));
        }
        for &p in periods {
            crate::harmonic::check_period(p)?;
        }
        let n = times.len();
        let weights: Vec<T> = sigmas.iter().map(|&s| (s * s).recip()).collect();
        let sum_w: T = weights.iter().copied().sum();
        let store = periods.len().saturating_mul(n) <= MAX_STORED_ENTRIES;

        let rows: Vec<(Vec<T>, Vec<T>, NormalMatrix<T>)> = periods
            .par_iter()
            .map(|&theta| {
                let (cw, sw) = Self::weighted_row(times, &weights, theta);
                let mut m = [T::zero(); 6];
                m[0] = sum_w;
                for i in 0..n {
                    let w = weights[i];
                    let c = cw[i] / w;
                    let s = sw[i] / w;
                    m[1] = m[1] + cw[i];
                    m[2] = m[2] + sw[i];
                    m[3] = m[3] + cw[i] * c;
                    m[4] = m[4] + cw[i] * s;
                    m[5] = m[5] + sw[i] * s;
                }
                if store {
                    (cw, sw, NormalMatrix(m))
                } else {
                    (Vec::new(), Vec::new(), NormalMatrix(m))
                }
            })
            .collect();

        let mut cos_w = Vec::with_capacity(if store { periods.len() * n } else { 0 });
        let mut sin_w = Vec::with_capacity(cos_w.capacity());
        let mut normals = Vec::with_capacity(periods.len());
        let mut solvers = Vec::with_capacity(periods.len());
        let mut conditions = Vec::with_capacity(periods.len());
        for (cw, sw, m) in rows {
            cos_w.extend_from_slice(&cw);
            sin_w.extend_from_slice(&sw);
            match m.factor() {
                Ok(s) => {
                    solvers.push(Some(s));
                    conditions.push(T::zero());
                }
                Err(cond) => {
                    solvers.push(None);
                    conditions.push(cond);
                }
            }
            normals.push(m);
        }
        Ok(Self {
            periods: periods.to_vec(),
            times: times.to_vec(),
            weights,
            cos_w,
            sin_w,
            normals,
            solvers,
            conditions,
        })
    }

    pub fn for_series(ts: &TimeSeries<T>, periods: &[T]) -> Result<Self> {
        Self::new(ts.times(), ts.sigmas(), periods)
    }

    fn weighted_row(times: &[T], weights: &[T], theta: T) -> (Vec<T>, Vec<T>) {
        times
            .iter()
            .zip(weights)
            .map(|(&t, &w)| {
                let (c, s) = phase_trig(t, theta);
                (w * c, w * s)
            })
            .unzip()
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn is_singular(&self, k: usize) -> bool {
        self.solvers[k].is_none()
    }

    /// Condition number recorded for a singular period (zero otherwise).
    pub fn condition(&self, k: usize) -> T {
        self.conditions[k]
    }

    fn value_sums(&self, y: &[T]) -> ValueSums<T> {
        let n = T::from_usize(y.len()).unwrap();
        let mean = y.iter().copied().sum::<T>() / n;
        let mut sum_wy = T::zero();
        let mut ywy = T::zero();
        let mut baseline = T::zero();
        for (&v, &w) in y.iter().zip(&self.weights) {
            let wy = w * v;
            sum_wy = sum_wy + wy;
            ywy = ywy + wy * v;
            let d = v - mean;
            baseline = baseline + w * d * d;
        }
        ValueSums {
            sum_wy,
            ywy,
            baseline,
        }
    }

    #[inline]
    fn rhs(&self, k: usize, y: &[T], sums: &ValueSums<T>, scratch: &mut Scratch<T>) -> [T; 3] {
        let n = self.n();
        let (bc, bs) = if self.cos_w.is_empty() {
            scratch.fill(&self.times, &self.weights, self.periods[k]);
            dot2(&scratch.cos_w, &scratch.sin_w, y)
        } else {
            let row = k * n..(k + 1) * n;
            dot2(&self.cos_w[row.clone()], &self.sin_w[row], y)
        };
        [sums.sum_wy, bc, bs]
    }

    #[inline]
    fn profiled_at(&self, k: usize, y: &[T], sums: &ValueSums<T>, scratch: &mut Scratch<T>) -> T {
        match &self.solvers[k] {
            None => T::zero(),
            Some(solver) => {
                let b = self.rhs(k, y, sums, scratch);
                let loss = (sums.ywy - solver.explained(b)).max(T::zero());
                ((sums.baseline - loss) / sums.baseline).max(T::zero()).min(T::one())
            }
        }
    }

    /// Profiled periodogram of `y`, serially. Singular periods get power 0;
    /// a constant `y` gives all zeros.
    pub fn profiled_powers_into(&self, y: &[T], out: &mut [T]) {
        assert_eq!(y.len(), self.n());
        assert_eq!(out.len(), self.len());
        let sums = self.value_sums(y);
        if !(sums.baseline > T::zero()) {
            out.iter_mut().for_each(|p| *p = T::zero());
            return;
        }
        let mut scratch = Scratch::new(self);
        for (k, p) in out.iter_mut().enumerate() {
            *p = self.profiled_at(k, y, &sums, &mut scratch);
        }
    }

    /// Profiled periodogram of `y`, parallel over periods. Bitwise identical
    /// to [`Self::profiled_powers_into`].
    pub fn profiled_powers_par(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.n());
        let sums = self.value_sums(y);
        if !(sums.baseline > T::zero()) {
            return vec![T::zero(); self.len()];
        }
        (0..self.len())
            .into_par_iter()
            .map_init(
                || Scratch::new(self),
                |scratch, k| self.profiled_at(k, y, &sums, scratch),
            )
            .collect()
    }

    /// Least-squares parameters at period index `k`.
    pub fn fit_params(&self, k: usize, y: &[T]) -> Option<HarmonicParams<T>> {
        let solver = self.solvers[k].as_ref()?;
        let sums = self.value_sums(y);
        let mut scratch = Scratch::new(self);
        Some(HarmonicParams::from_array(solver.solve(self.rhs(k, y, &sums, &mut scratch))))
    }

    /// `max_k P(k) - P(k0)` for the profiled periodogram `P` of `y`.
    pub fn profiled_gap(&self, y: &[T], k0: usize, scratch: &mut Scratch<T>) -> T {
        let sums = self.value_sums(y);
        if !(sums.baseline > T::zero()) {
            return T::zero();
        }
        let mut max = T::neg_infinity();
        let mut at = T::zero();
        for k in 0..self.len() {
            let p = self.profiled_at(k, y, &sums, scratch);
            if p > max {
                max = p;
            }
            if k == k0 {
                at = p;
            }
        }
        max - at
    }

    /// Oracle power at every period for fixed parameters, serially.
    pub fn oracle_powers_into(&self, y: &[T], params: &HarmonicParams<T>, out: &mut [T]) {
        let sums = self.value_sums(y);
        let mut scratch = Scratch::new(self);
        for (k, p) in out.iter_mut().enumerate() {
            *p = self.oracle_at(k, y, params, &sums, &mut scratch);
        }
    }

    #[inline]
    fn oracle_at(
        &self,
        k: usize,
        y: &[T],
        params: &HarmonicParams<T>,
        sums: &ValueSums<T>,
        scratch: &mut Scratch<T>,
    ) -> T {
        let b = self.rhs(k, y, sums, scratch);
        let m = &self.normals[k];
        let psi = params.as_array();
        let mut quad = T::zero();
        let mut cross = T::zero();
        for i in 0..3 {
            cross = cross + psi[i] * b[i];
            for j in 0..3 {
                quad = quad + psi[i] * m.at(i, j) * psi[j];
            }
        }
        let loss = (sums.ywy - T::lit(2.0) * cross + quad).max(T::zero());
        (sums.baseline - loss) / sums.baseline
    }

    /// `max_k A(k | params) - A(k0 | params)` for the oracle periodogram.
    /// Zero when `y` is constant.
    pub fn oracle_gap(&self, y: &[T], params: &HarmonicParams<T>, k0: usize, scratch: &mut Scratch<T>) -> T {
        let sums = self.value_sums(y);
        if !(sums.baseline > T::zero()) {
            return T::zero();
        }
        let mut max = T::neg_infinity();
        let mut at = T::zero();
        for k in 0..self.len() {
            let p = self.oracle_at(k, y, params, &sums, scratch);
            if p > max {
                max = p;
            }
            if k == k0 {
                at = p;
            }
        }
        max - at
    }
}

/// Per-worker buffers for on-the-fly trig rows when the basis is not cached.
#[derive(Debug, Clone)]
pub struct Scratch<T> {
    cos_w: Vec<T>,
    sin_w: Vec<T>,
}

impl<T: Real> Scratch<T> {
    pub fn new(basis: &SpectralBasis<T>) -> Self {
        let len = if basis.cos_w.is_empty() { basis.n() } else { 0 };
        Self {
            cos_w: vec![T::zero(); len],
            sin_w: vec![T::zero(); len],
        }
    }

    fn fill(&mut self, times: &[T], weights: &[T], theta: T) {
        for i in 0..times.len() {
            let (c, s) = phase_trig(times[i], theta);
            self.cos_w[i] = weights[i] * c;
            self.sin_w[i] = weights[i] * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{baseline_loss, fit_harmonic, loss};

    fn sample() -> TimeSeries<f64> {
        let times: Vec<f64> = (0..23).map(|i| i as f64 * 0.77 + 0.2 * (i as f64 * 1.3).sin()).collect();
        let values: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| 0.5 + (t / 2.3 * std::f64::consts::TAU).cos() + 0.3 * ((i * 7 % 5) as f64 - 2.0))
            .collect();
        let sigmas: Vec<f64> = (0..23).map(|i| 0.5 + (i % 3) as f64 * 0.25).collect();
        TimeSeries::new(times, values, sigmas).unwrap()
    }

    #[test]
    fn matches_direct_fit() {
        let ts = sample();
        let periods = [0.9, 1.7, 2.3, 5.0, 11.0];
        let basis = SpectralBasis::for_series(&ts, &periods).unwrap();
        let mut power = vec![0.0; periods.len()];
        basis.profiled_powers_into(ts.values(), &mut power);
        let l0 = baseline_loss(&ts);
        for (k, &theta) in periods.iter().enumerate() {
            let fit = fit_harmonic(&ts, theta).unwrap();
            let direct = (l0 - fit.loss) / l0;
            assert!((direct - power[k]).abs() < 1e-12, "{direct} vs {}", power[k]);
            let p = basis.fit_params(k, ts.values()).unwrap();
            assert!((p.cos_amp - fit.params.cos_amp).abs() < 1e-12);
        }
        assert_eq!(basis.profiled_powers_par(ts.values()), power);
    }

    #[test]
    fn oracle_matches_direct_loss() {
        let ts = sample();
        let periods = [1.1, 2.3, 4.0];
        let basis = SpectralBasis::for_series(&ts, &periods).unwrap();
        let params = HarmonicParams::new(0.4, 0.9, -0.2);
        let mut out = vec![0.0; 3];
        basis.oracle_powers_into(ts.values(), &params, &mut out);
        let l0 = baseline_loss(&ts);
        for (k, &theta) in periods.iter().enumerate() {
            let direct = (l0 - loss(&ts, theta, &params).unwrap()) / l0;
            assert!((direct - out[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn lazy_rows_agree_with_cached() {
        let ts = sample();
        let periods = [0.9, 1.7, 2.3];
        let cached = SpectralBasis::for_series(&ts, &periods).unwrap();
        let mut lazy = cached.clone();
        lazy.cos_w.clear();
        lazy.sin_w.clear();
        let mut a = vec![0.0; 3];
        let mut b = vec![0.0; 3];
        cached.profiled_powers_into(ts.values(), &mut a);
        lazy.profiled_powers_into(ts.values(), &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn singular_periods_flagged() {
        let ts = TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0, 5.0], vec![1.0; 4]).unwrap();
        let basis = SpectralBasis::for_series(&ts, &[0.5, 1.0, 1.37]).unwrap();
        assert!(basis.is_singular(0));
        assert!(basis.is_singular(1));
        assert!(!basis.is_singular(2));
        assert!(basis.condition(1) > 1e12);
        let p = basis.profiled_powers_par(ts.values());
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn dot2_remainder_paths() {
        for n in 0..11 {
            let a: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let b: Vec<f64> = (0..n).map(|i| 1.0 - i as f64).collect();
            let y: Vec<f64> = (0..n).map(|i| 0.5 * i as f64 + 1.0).collect();
            let (x, z) = dot2(&a, &b, &y);
            let ex: f64 = a.iter().zip(&y).map(|(p, q)| p * q).sum();
            let ez: f64 = b.iter().zip(&y).map(|(p, q)| p * q).sum();
            assert!((x - ex).abs() < 1e-12 && (z - ez).abs() < 1e-12);
        }
    }
}
