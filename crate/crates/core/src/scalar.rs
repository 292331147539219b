//! Real scalar abstraction shared by every numerical routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point real type the solver is generic over (`f32` or `f64`).
///
/// Only [`RealField`] methods are used on values of this type, so there is no
/// ambiguity with `num_traits::Float`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion to `f64`, used for reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Floor for tolerances so that defaults remain meaningful in low precision.
    fn tolerance_floor(x: f64) -> Self {
        let eps = Self::default_epsilon().as_f64();
        Self::lit(x.max(eps * 1.0e3))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the scalar type `T`.
pub type Cx<T> = Complex<T>;

pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

pub(crate) fn cx_real<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}
