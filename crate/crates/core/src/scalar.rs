//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts a count (node index, sample size) into this scalar type.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Absolute slack used on inequalities that only accumulate rounding.
    ///
    /// 1e-12 for `f64`; for `f32` the machine epsilon dominates.
    fn rounding_slack() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(16.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Formats a scalar with 17 significant digits, the precision used by every CSV writer.
pub fn fmt17<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

/// Rounds `ratio` to the nearest integer when it lies within a relative
/// `1e-9` of one; used to check that a step divides an interval.
pub(crate) fn integral_ratio<T: Scalar>(ratio: T) -> Option<usize> {
    if !ratio.is_finite() || ratio < -T::lit(0.5) {
        return None;
    }
    let rounded = ratio.round();
    let tol = T::lit(1e-9).max(T::epsilon() * T::lit(8.0)) * rounded.max(T::one());
    if (ratio - rounded).abs() <= tol {
        rounded.to_usize()
    } else {
        None
    }
}
