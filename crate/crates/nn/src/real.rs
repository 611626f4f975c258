//! Scalar abstraction: the kernels run in `f32` for training and in `f64`
//! for gradient checking, over one shared implementation.

use std::fmt::{Debug, Display};

/// Floating-point scalar used by all tensor kernels.
///
/// A thin extension of [`num_traits::Float`] adding the conversions the
/// kernels need. Implemented for `f32` and `f64`.
pub trait Real:
    num_traits::Float + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn from_f64(v: f64) -> Self;
    /// Widening conversion to `f64` (exact for both implementors).
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Shorthand for converting an `f64` constant into the working scalar.
#[inline(always)]
pub fn real<S: Real>(v: f64) -> S {
    S::from_f64(v)
}
