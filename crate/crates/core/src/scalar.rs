//! Scalar abstraction shared by every geometric routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for design points, responses and band values.
///
/// Infinities are part of the value range (band boundaries live on the
/// extended real line); NaN never is.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for user-facing parameters.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pointwise maximum that never produces NaN for extended reals.
#[inline]
pub(crate) fn max_ext<F: Scalar>(a: F, b: F) -> F {
    if a >= b {
        a
    } else {
        b
    }
}

/// Pointwise minimum, see [`max_ext`].
#[inline]
pub(crate) fn min_ext<F: Scalar>(a: F, b: F) -> F {
    if a <= b {
        a
    } else {
        b
    }
}
