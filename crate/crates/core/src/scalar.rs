//! Numeric traits shared by the crate.
//!
//! Dense and sparse kernels, models and propagation are written against
//! [`Scalar`] (implemented for `f32` and `f64`). The closed-form theory is
//! written against [`Field`], which additionally admits exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};
use std::str::FromStr;

use ndarray::{LinalgScalar, ScalarOperand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Display
    + Debug
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Values outside the range of `Self` saturate to infinity.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Ordered field used by the closed-form correction analysis.
///
/// Implemented for `f32`, `f64` and [`BigRational`], so the same formulas can be
/// evaluated in floating point and exactly.
pub trait Field: Clone + PartialOrd + Num + Neg<Output = Self> + Signed + Debug {
    /// Exact conversion of a finite `f64` (rationals) or a rounding cast (floats).
    fn from_f64(x: f64) -> Self;

    fn from_usize(n: usize) -> Self;

    fn to_f64(&self) -> f64;
}

impl Field for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn from_usize(n: usize) -> Self {
        n as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Field for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite f64")
    }
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_conversion_is_exact() {
        let x = 0.1f64;
        let r = <BigRational as Field>::from_f64(x);
        assert_eq!(Field::to_f64(&r), x);
        assert_ne!(r, BigRational::new(1.into(), 10.into()));
    }

    #[test]
    fn lit_round_trips_for_f32() {
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::lit(0.1).as_f64(), 0.1);
    }
}
