//! Scalar abstraction for the numeric kernels.
//!
//! Everything that does arithmetic on observations (fits, periodograms,
//! test statistics) is generic over [`Real`], implemented for `f32` and
//! `f64`. Random draws are always made in `f64` and then cast, so a given
//! seed produces the same synthetic data at either precision up to rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Largest 1-norm condition number of the 3x3 normal matrix that is
    /// still treated as solvable.
    fn max_condition() -> Self;

    /// Lossy conversion from `f64`; panics only for values that cannot be
    /// represented at all, which never happens for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn max_condition() -> Self {
        1e12
    }
}

impl Real for f32 {
    #[inline]
    fn max_condition() -> Self {
        1e5
    }
}
