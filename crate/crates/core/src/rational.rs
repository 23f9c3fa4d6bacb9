//! Exact rational helpers. Every probability, payment and utility in the crate
//! is a [`Rational`]; nothing is ever rounded.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `n/d` in lowest terms. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"num/den"` or a bare integer. The result is normalized.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Instance(format!("malformed rational {text:?}"));
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(Error::Instance(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Canonical text form: `"-1/3"`, `"1/2"`, integers as `"1"`.
pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn in_unit_interval(r: &Rational) -> bool {
    r.abs() <= one()
}

pub fn sum<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Rational {
    items.into_iter().fold(zero(), |acc, x| acc + x)
}
