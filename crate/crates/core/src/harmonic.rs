//! Weighted least-squares fit of the single-harmonic model
//! `y(t) = intercept + cos_amp * cos(2 pi t / theta) + sin_amp * sin(2 pi t / theta)`.
//!
//! The parameter space is all finite triples; no bound is imposed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HarmonicParams<T> {
    pub intercept: T,
    pub cos_amp: T,
    pub sin_amp: T,
}

impl<T: Real> HarmonicParams<T> {
    pub fn new(intercept: T, cos_amp: T, sin_amp: T) -> Self {
        Self {
            intercept,
            cos_amp,
            sin_amp,
        }
    }

    pub fn constant(c: T) -> Self {
        Self::new(c, T::zero(), T::zero())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.intercept, self.cos_amp, self.sin_amp]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn amplitude(&self) -> T {
        self.cos_amp.hypot(self.sin_amp)
    }

    /// Model value from precomputed `(cos, sin)` of the phase.
    #[inline]
    pub fn eval_trig(&self, c: T, s: T) -> T {
        self.intercept + self.cos_amp * c + self.sin_amp * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FitResult<T> {
    pub params: HarmonicParams<T>,
    pub loss: T,
    pub theta: T,
}

pub(crate) fn check_period<T: Real>(theta: T) -> Result<()> {
    if theta.is_finite() && theta > T::zero() {
        Ok(())
    } else {
        Err(Error::NonPositivePeriod(theta.to_f64_lossy()))
    }
}

/// `(cos, sin)` of `2 pi t / theta`.
#[inline]
pub(crate) fn phase_trig<T: Real>(t: T, theta: T) -> (T, T) {
    let (s, c) = (T::TAU() * t / theta).sin_cos();
    (c, s)
}

pub fn predict<T: Real>(params: &HarmonicParams<T>, theta: T, t: T) -> Result<T> {
    check_period(theta)?;
    let (c, s) = phase_trig(t, theta);
    Ok(params.eval_trig(c, s))
}

/// Weighted residual sum of squares `sum (y_i - model(t_i))^2 / sigma_i^2`.
pub fn loss<T: Real>(ts: &TimeSeries<T>, theta: T, params: &HarmonicParams<T>) -> Result<T> {
    check_period(theta)?;
    Ok(ts
        .times()
        .iter()
        .zip(ts.values())
        .zip(ts.sigmas())
        .map(|((&t, &y), &s)| {
            let (c, sn) = phase_trig(t, theta);
            let r = (y - params.eval_trig(c, sn)) / s;
            r * r
        })
        .sum())
}

/// Baseline loss around the unweighted mean of the values.
pub fn baseline_loss<T: Real>(ts: &TimeSeries<T>) -> T {
    baseline_loss_of(ts.values(), ts.sigmas())
}

pub(crate) fn baseline_loss_of<T: Real>(values: &[T], sigmas: &[T]) -> T {
    let n = T::from_usize(values.len()).unwrap();
    let mean = values.iter().copied().sum::<T>() / n;
    values
        .iter()
        .zip(sigmas)
        .map(|(&y, &s)| {
            let d = (y - mean) / s;
            d * d
        })
        .sum()
}

/// Symmetric 3x3 normal matrix stored as `[m00, m01, m02, m11, m12, m22]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormalMatrix<T>(pub [T; 6]);

/// Cholesky factor and inverse of a well-conditioned normal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormalSolver<T> {
    /// Lower-triangular factor `[l00, l10, l20, l11, l21, l22]`.
    chol: [T; 6],
    pub inverse: [T; 6],
}

impl<T: Real> NormalMatrix<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
        self.0[IDX[i][j]]
    }

    fn norm1(m: &[T; 6]) -> T {
        let a = NormalMatrix(*m);
        (0..3)
            .map(|j| (0..3).map(|i| a.at(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Factor the matrix, or report its (1-norm) condition number when it
    /// exceeds [`Real::max_condition`]. A failed factorization reports an
    /// infinite condition number.
    pub fn factor(&self) -> std::result::Result<NormalSolver<T>, T> {
        let m = &self.0;
        let zero = T::zero();
        if !(m[0] > zero) {
            return Err(T::infinity());
        }
        let l00 = m[0].sqrt();
        let l10 = m[1] / l00;
        let l20 = m[2] / l00;
        let d1 = m[3] - l10 * l10;
        if !(d1 > zero) {
            return Err(T::infinity());
        }
        let l11 = d1.sqrt();
        let l21 = (m[4] - l20 * l10) / l11;
        let d2 = m[5] - l20 * l20 - l21 * l21;
        if !(d2 > zero) {
            return Err(T::infinity());
        }
        let l22 = d2.sqrt();

        // Inverse of L (lower triangular), then M^-1 = L^-T L^-1.
        let i00 = l00.recip();
        let i11 = l11.recip();
        let i22 = l22.recip();
        let i10 = -l10 * i00 * i11;
        let i21 = -l21 * i11 * i22;
        let i20 = -(l20 * i00 + l21 * i10) * i22;
        let inverse = [
            i00 * i00 + i10 * i10 + i20 * i20,
            i10 * i11 + i20 * i21,
            i20 * i22,
            i11 * i11 + i21 * i21,
            i21 * i22,
            i22 * i22,
        ];
        let cond = Self::norm1(m) * Self::norm1(&inverse);
        if !cond.is_finite() || cond > T::max_condition() {
            return Err(cond);
        }
        Ok(NormalSolver {
            chol: [l00, l10, l20, l11, l21, l22],
            inverse,
        })
    }
}

impl<T: Real> NormalSolver<T> {
    /// Solve `M x = b` by forward and back substitution.
    #[inline]
    pub fn solve(&self, b: [T; 3]) -> [T; 3] {
        let [l00, l10, l20, l11, l21, l22] = self.chol;
        let z0 = b[0] / l00;
        let z1 = (b[1] - l10 * z0) / l11;
        let z2 = (b[2] - l20 * z0 - l21 * z1) / l22;
        let x2 = z2 / l22;
        let x1 = (z1 - l21 * x2) / l11;
        let x0 = (z0 - l10 * x1 - l20 * x2) / l00;
        [x0, x1, x2]
    }

    /// `b^T M^-1 b`, the loss reduction achieved by the fit.
    #[inline]
    pub fn explained(&self, b: [T; 3]) -> T {
        let v = &self.inverse;
        v[0] * b[0] * b[0]
            + v[3] * b[1] * b[1]
            + v[5] * b[2] * b[2]
            + T::lit(2.0) * (v[1] * b[0] * b[1] + v[2] * b[0] * b[2] + v[4] * b[1] * b[2])
    }
}

/// Closed-form weighted least-squares fit at a fixed trial period.
///
/// Requires `n >= 3`. Fails with [`Error::SingularDesign`] when the normal
/// matrix is numerically singular, e.g. all times congruent modulo `theta`.
pub fn fit_harmonic<T: Real>(ts: &TimeSeries<T>, theta: T) -> Result<FitResult<T>> {
    check_period(theta)?;
    if ts.len() < 3 {
        return Err(Error::TooFewObservations {
            required: 3,
            found: ts.len(),
        });
    }
    let mut m = [T::zero(); 6];
    let mut b = [T::zero(); 3];
    for ((&t, &y), &s) in ts.times().iter().zip(ts.values()).zip(ts.sigmas()) {
        let w = (s * s).recip();
        let (c, sn) = phase_trig(t, theta);
        m[0] = m[0] + w;
        m[1] = m[1] + w * c;
        m[2] = m[2] + w * sn;
        m[3] = m[3] + w * c * c;
        m[4] = m[4] + w * c * sn;
        m[5] = m[5] + w * sn * sn;
        b[0] = b[0] + w * y;
        b[1] = b[1] + w * c * y;
        b[2] = b[2] + w * sn * y;
    }
    let solver = NormalMatrix(m).factor().map_err(|cond| Error::SingularDesign {
        theta: theta.to_f64_lossy(),
        condition: cond.to_f64_lossy(),
    })?;
    let params = HarmonicParams::from_array(solver.solve(b));
    let loss = loss(ts, theta, &params)?;
    Ok(FitResult {
        params,
        loss,
        theta,
    })
}

/// Model values at every observation time.
pub fn fitted_values<T: Real>(ts: &TimeSeries<T>, theta: T, params: &HarmonicParams<T>) -> Result<Vec<T>> {
    check_period(theta)?;
    Ok(ts
        .times()
        .iter()
        .map(|&t| {
            let (c, s) = phase_trig(t, theta);
            params.eval_trig(c, s)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: &[f64], values: &[f64], sigmas: &[f64]) -> TimeSeries<f64> {
        TimeSeries::new(times.to_vec(), values.to_vec(), sigmas.to_vec()).unwrap()
    }

    #[test]
    fn predict_examples() {
        let c = HarmonicParams::constant(3.5);
        assert_eq!(predict(&c, 7.0, 123.4).unwrap(), 3.5);
        assert_eq!(predict(&HarmonicParams::new(0.0, 1.0, 0.0), 1.0, 0.0).unwrap(), 1.0);
        let v: f64 = predict(&HarmonicParams::new(0.0, 0.0, 1.0), 4.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(
            predict(&c, 0.0, 1.0).unwrap_err(),
            Error::NonPositivePeriod(0.0)
        );
        assert!(predict(&c, -2.0, 1.0).is_err());
    }

    #[test]
    fn loss_two_point() {
        let ts = series(&[0.0, 1.0], &[0.0, 2.0], &[1.0, 1.0]);
        assert_eq!(loss(&ts, 10.0, &HarmonicParams::constant(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn loss_zero_on_generating_params() {
        let p = HarmonicParams::new(1.0, -2.0, 0.5);
        let times = [0.0, 0.7, 1.9, 3.3];
        let values: Vec<f64> = times.iter().map(|&t| predict(&p, 2.5, t).unwrap()).collect();
        let ts = series(&times, &values, &[1.0, 2.0, 0.5, 1.0]);
        assert_eq!(loss(&ts, 2.5, &p).unwrap(), 0.0);
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(baseline_loss(&series(&[0.0, 1.0, 2.0], &[4.0; 3], &[1.0; 3])), 0.0);
        assert_eq!(baseline_loss(&series(&[0.0, 1.0], &[0.0, 2.0], &[1.0, 1.0])), 2.0);
        assert_eq!(baseline_loss(&series(&[0.0, 1.0], &[0.0, 2.0], &[1.0, 2.0])), 1.25);
    }

    #[test]
    fn recovers_noiseless_cosine() {
        let theta = 3.7;
        let times = [0.13, 1.9, 2.45, 5.3, 8.77];
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 2.0 + 3.0 * (std::f64::consts::TAU * t / theta).cos())
            .collect();
        let fit = fit_harmonic(&series(&times, &values, &[1.0; 5]), theta).unwrap();
        assert!((fit.params.intercept - 2.0).abs() < 1e-9);
        assert!((fit.params.cos_amp - 3.0).abs() < 1e-9);
        assert!(fit.params.sin_amp.abs() < 1e-9);
        assert!(fit.loss < 1e-9);
    }

    #[test]
    fn constant_series_fits_intercept() {
        let ts = series(&[0.1, 0.9, 2.3, 3.1], &[5.0; 4], &[1.0, 2.0, 1.0, 0.5]);
        let fit = fit_harmonic(&ts, 2.9).unwrap();
        assert!((fit.params.intercept - 5.0).abs() < 1e-12);
        assert!(fit.params.cos_amp.abs() < 1e-12 && fit.params.sin_amp.abs() < 1e-12);
    }

    #[test]
    fn congruent_times_are_singular() {
        let ts = series(&[0.0, 2.0, 4.0, 6.0], &[1.0, 2.0, 3.0, 1.0], &[1.0; 4]);
        match fit_harmonic(&ts, 2.0) {
            Err(Error::SingularDesign { condition, .. }) => assert!(condition > 1e12),
            other => panic!("expected SingularDesign, got {other:?}"),
        }
        // Half-period spacing: sine column vanishes.
        assert!(matches!(
            fit_harmonic(&ts, 4.0),
            Err(Error::SingularDesign { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        let ts = series(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(
            fit_harmonic(&ts, 3.0),
            Err(Error::TooFewObservations { .. })
        ));
    }

    #[test]
    fn solver_matches_inverse() {
        let m = NormalMatrix([4.0, 1.0, 0.5, 3.0, 0.25, 2.0]);
        let s = m.factor().unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = s.solve(b);
        let inv = NormalMatrix(s.inverse);
        for i in 0..3 {
            let via_inv: f64 = (0..3).map(|j| inv.at(i, j) * b[j]).sum();
            assert!((via_inv - x[i]).abs() < 1e-14);
            let back: f64 = (0..3).map(|j| m.at(i, j) * x[j]).sum();
            assert!((back - b[i]).abs() < 1e-14);
        }
        let explained: f64 = (0..3).map(|i| b[i] * x[i]).sum();
        assert!((s.explained(b) - explained).abs() < 1e-14);
    }

    #[test]
    fn generic_over_f32() {
        let times = [0.0f32, 0.4, 1.1, 2.0, 2.7];
        let values: Vec<f32> = times
            .iter()
            .map(|&t| 1.0 + (std::f32::consts::TAU * t / 1.7).sin())
            .collect();
        let ts = TimeSeries::new(times.to_vec(), values, vec![1.0f32; 5]).unwrap();
        let fit = fit_harmonic(&ts, 1.7f32).unwrap();
        assert!((fit.params.sin_amp - 1.0).abs() < 1e-4);
    }
}
