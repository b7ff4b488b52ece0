//! Arithmetic abstraction shared by the floating-point and exact-rational paths.
//!
//! The recursions in [`crate::exact`] and the path sums in [`crate::fk`] are
//! written once against [`Scalar`]. With `f64` they are the production kernels;
//! with [`BigRational`] every identity is checked with zero tolerance.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used by the verification paths.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact (comparisons need no tolerance).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_u64(v: u64) -> Self;
    /// Lossless for rationals (every finite double is a dyadic rational).
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn is_zero_value(&self) -> bool {
        *self == Self::zero()
    }

    /// `a == b` for exact scalars, `|a - b| <= tol` otherwise.
    fn near(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.to_f64() - other.to_f64()).abs() <= tol
        }
    }

    fn to_wire(&self) -> serde_json::Value;
    fn from_wire(v: &serde_json::Value) -> Option<Self>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_u64(v: u64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_wire(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
    fn from_wire(v: &serde_json::Value) -> Option<Self> {
        v.as_f64()
    }
    fn powi(&self, e: u32) -> Self {
        f64::powi(*self, e as i32)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    // numerator/denominator pair as decimal strings
    fn to_wire(&self) -> serde_json::Value {
        serde_json::json!([self.numer().to_string(), self.denom().to_string()])
    }
    fn from_wire(v: &serde_json::Value) -> Option<Self> {
        let pair = v.as_array()?;
        if pair.len() != 2 {
            return None;
        }
        let parse = |x: &serde_json::Value| -> Option<BigInt> {
            match x {
                serde_json::Value::String(s) => s.parse().ok(),
                serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
                _ => None,
            }
        };
        let den = parse(&pair[1])?;
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(parse(&pair[0])?, den))
    }
}

/// Renders a scalar for reports: `p/q` for rationals, shortest round-trip for doubles.
pub fn render<T: Scalar>(v: &T) -> String {
    format!("{v}")
}
