//! Scalar abstraction shared by the LP solver, metrics and certificates.
//!
//! Everything numeric in this crate is generic over [`Scalar`]. Floating
//! point types carry small tolerances; [`Rational`] is exact and every
//! tolerance collapses to zero.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational used for exact re-verification.
pub type Rational = BigRational;

pub trait Scalar: Num + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Entries with magnitude at or below this are not used as pivots.
    fn pivot_tolerance() -> Self;

    /// Slack allowed when deciding optimality and feasibility inside the solver.
    fn solver_tolerance() -> Self;

    /// Values this small are flushed to exact zero after a row update.
    fn flush_threshold() -> Self;

    /// True when arithmetic is exact.
    fn is_exact() -> bool;

    /// Conversion from a finite double. Exact types take the shortest decimal
    /// representation of `v`, so `0.014507` becomes `14507/1000000`.
    fn from_f64(v: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn from_i64(v: i64) -> Self;

    /// Flush values below [`Scalar::flush_threshold`] to zero.
    #[inline]
    fn flush(&mut self) {
        if !Self::is_exact() && self.abs() <= Self::flush_threshold() {
            *self = Self::zero();
        }
    }
}

impl Scalar for f64 {
    fn pivot_tolerance() -> Self {
        1e-9
    }
    fn solver_tolerance() -> Self {
        1e-10
    }
    fn flush_threshold() -> Self {
        1e-14
    }
    fn is_exact() -> bool {
        false
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for f32 {
    fn pivot_tolerance() -> Self {
        1e-5
    }
    fn solver_tolerance() -> Self {
        1e-6
    }
    fn flush_threshold() -> Self {
        1e-7
    }
    fn is_exact() -> bool {
        false
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn from_i64(v: i64) -> Self {
        v as f32
    }
}

impl Scalar for Rational {
    fn pivot_tolerance() -> Self {
        Self::zero()
    }
    fn solver_tolerance() -> Self {
        Self::zero()
    }
    fn flush_threshold() -> Self {
        Self::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "cannot represent {v} as a rational");
        parse_decimal(&format!("{v}")).expect("Display of a finite f64 is a decimal literal")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_i64(v: i64) -> Self {
        Self::from_integer(BigInt::from(v))
    }
}

/// Parse a plain decimal literal (`-12.0345`, `7`, `.5`) into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::parse_bytes(digits.as_bytes(), 10)?;
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

pub(crate) fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub(crate) fn sum<T: Scalar, I: IntoIterator<Item = T>>(items: I) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x)
}
