//! Scalar abstraction shared by distributions, couplings, flows and the
//! transport solver.
//!
//! Exact types (`BigRational`, `Ratio<i64>`) report a zero tolerance, so every
//! comparison in generic code degenerates to exact equality. Floating types
//! carry a small absolute tolerance instead.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Ordered field element usable by the generic numerics in this crate.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Absolute tolerance used for sign tests. Zero for exact types.
    fn tolerance() -> Self;

    fn is_exact() -> bool;

    /// Numerator and denominator when the value is an exact fraction that fits
    /// in `i64`.
    fn as_fraction(&self) -> Option<(i64, i64)>;

    /// Nearest representable value; exact types take the exact binary value.
    fn from_f64(x: f64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// `self > tolerance`.
    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    /// `self < -tolerance`.
    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }

    /// `|self - other| <= tolerance`.
    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn tolerance() -> Self {
        1e-12
    }
    fn is_exact() -> bool {
        false
    }
    fn as_fraction(&self) -> Option<(i64, i64)> {
        None
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn tolerance() -> Self {
        1e-5
    }
    fn is_exact() -> bool {
        false
    }
    fn as_fraction(&self) -> Option<(i64, i64)> {
        None
    }
}

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
    fn from_f64(x: f64) -> Self {
        Ratio::approximate_float(x).expect("finite value within i64 range")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tolerance() -> Self {
        Ratio::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn as_fraction(&self) -> Option<(i64, i64)> {
        Some((*self.numer(), *self.denom()))
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tolerance() -> Self {
        BigRational::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn as_fraction(&self) -> Option<(i64, i64)> {
        Some((self.numer().to_i64()?, self.denom().to_i64()?))
    }
}

/// Exact rational from an `i64` fraction.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::from_ratio(num, den)
}
