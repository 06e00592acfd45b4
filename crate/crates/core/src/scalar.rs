//! Floating-point scalar abstraction shared by the signal and metric code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type usable for audio samples, features and distances.
///
/// Implemented for `f32` and `f64`. Literals inside generic code go through
/// [`Scalar::lit`], which is exact for every constant used in this crate.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + FftNum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts a duration in seconds to a sample count, rounding to the nearest
/// sample with exact ties rounded down.
pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    round_half_down(seconds * f64::from(sample_rate)).max(0.0) as usize
}

pub(crate) fn round_half_down(x: f64) -> f64 {
    let f = x.floor();
    if x - f > 0.5 {
        f + 1.0
    } else {
        f
    }
}
