//! Scalar abstraction shared by the numeric kernels.
//!
//! Link functions, spline bases, MAP fitting, estimand algebra and pooling are
//! written against [`Real`] so they run in `f32` or `f64`. The imputation and
//! simulation layers are concrete over `f64`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the numeric kernels.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
    /// Default absolute gradient tolerance for Newton iterations.
    fn gradient_tolerance() -> Self;
}

impl Real for f64 {
    fn gradient_tolerance() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn gradient_tolerance() -> Self {
        2e-3
    }
}

/// Lossy conversion of an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Widen `T` to `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn is_finite<T: Real>(x: T) -> bool {
    to_f64(x).is_finite()
}
