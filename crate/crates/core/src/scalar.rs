//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the crate is generic over. Implemented for `f32` and `f64`.
///
/// Math goes through [`RealField`]; `num-traits` supplies conversions and constants.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + FftNum + Debug + Display + Send + Sync + 'static
{
    /// Positive infinity, used as the sentinel for pure entanglement modes.
    fn infinity() -> Self;

    /// Lossless widening for `f32`, identity for `f64`.
    fn to_f64_exact(self) -> f64;
}

impl Real for f32 {
    fn infinity() -> Self {
        f32::INFINITY
    }

    fn to_f64_exact(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    fn infinity() -> Self {
        f64::INFINITY
    }

    fn to_f64_exact(self) -> f64 {
        self
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count or index into `T`.
#[inline]
pub fn from_usize<T: Real>(x: usize) -> T {
    T::from_usize(x).expect("usize representable in scalar type")
}
