//! Scalar backends: exact rationals and doubles.
//!
//! Every numeric routine is generic over [`Scalar`], so the same code path runs
//! with zero tolerance in [`Rational`] mode and at floating precision with `f64`.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub trait Scalar: Signed + Clone + Debug + PartialOrd + Send + Sync + 'static {
    /// Short backend name used in reports.
    const NAME: &'static str;
    /// Whether arithmetic is exact (residuals must vanish identically).
    const EXACT: bool;

    fn from_int(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    /// Exact rational value. Doubles are dyadic rationals and convert exactly.
    fn to_rational(&self) -> BigRational;
    fn to_f64(&self) -> f64;
    /// Text form: `p/q` for rationals, shortest round-trip decimal for doubles.
    fn to_text(&self) -> String;

    fn parse_text(s: &str) -> Result<Self> {
        parse_rational(s).map(|r| Self::from_rational(&r))
    }
}

impl Scalar for BigRational {
    const NAME: &'static str = "rational";
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_text(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "double";
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> BigRational {
        BigRational::from_f64(*self).unwrap_or_else(BigRational::zero)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_text(&self) -> String {
        format!("{self}")
    }
}

/// Parses `-12`, `3/4`, `0.125` or `-1.5/3` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = |msg: &str| Error::Parse {
        pos: 0,
        msg: format!("{msg}: {s:?}"),
    };
    let s = s.trim();
    let (num_part, den_part) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let num = parse_decimal(num_part).ok_or_else(|| bad("invalid number"))?;
    match den_part {
        None => Ok(num),
        Some(d) => {
            let den = parse_decimal(d).ok_or_else(|| bad("invalid denominator"))?;
            if den.is_zero() {
                return Err(bad("zero denominator"));
            }
            Ok(num / den)
        }
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), Rational::from_ratio(3, 4));
        assert_eq!(parse_rational("-0.125").unwrap(), Rational::from_ratio(-1, 8));
        assert_eq!(parse_rational("1.5/3").unwrap(), Rational::from_ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn double_text_round_trips() {
        for v in [0.1, -2.5e-17, 1.0 / 3.0, 123456.789] {
            assert_eq!(f64::parse_text(&v.to_text()).unwrap(), v);
            assert_eq!(f64::from_rational(&v.to_rational()), v);
        }
    }

    #[test]
    fn rational_text() {
        assert_eq!(Rational::from_ratio(-6, 4).to_text(), "-3/2");
        assert_eq!(Rational::from_int(7).to_text(), "7");
    }
}
