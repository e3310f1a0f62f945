//! Floating-point abstraction shared by every numerical kernel.
//!
//! The solver stack is written once against [`Real`] and instantiated for
//! `f64` (the reference precision, see the aliases in the crate root) and
//! `f32` (smoke-level runs). Linear algebra goes through `nalgebra`, so the
//! trait is anchored on [`nalgebra::RealField`]; conversions to and from
//! primitive floats use `num-traits`.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the discretization, solver and diagnostics.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Display + Debug + Send + Sync + 'static
{
    /// Machine epsilon of the underlying format.
    fn machine_eps() -> Self;
}

impl Real for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }
}

/// Converts an `f64` literal into the working precision.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in working precision")
}

/// Converts a working-precision value to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Converts a count into the working precision.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in working precision")
}
