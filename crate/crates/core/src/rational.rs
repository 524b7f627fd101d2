//! Exact rationals for state fractions, rates and bounds.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("'{0}' is not an exact rational; write it as num/den (decimals are rejected)")]
    NotRational(String),
    #[error("zero denominator in '{0}'")]
    ZeroDenominator(String),
}

/// Parses `"num/den"` or a bare integer. Decimal notation is rejected so that
/// every comparison downstream stays exact.
pub fn parse_rational(s: &str) -> Result<Rational, RationalError> {
    let t = s.trim();
    let bad = || RationalError::NotRational(s.to_string());
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let is_int = |x: &str| {
        let digits = x.strip_prefix('-').unwrap_or(x);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !is_int(den) {
        return Err(bad());
    }
    let n: i64 = num.parse().map_err(|_| bad())?;
    let d: i64 = den.parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(RationalError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// Renders a rational as `"n/d"`, or `"n"` when integral.
pub fn format_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with a fixed number of digits, for reports only.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let v = r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN);
    format!("{v:.digits$}")
}

/// A rate in normalized units (one clean link carries 1 per channel use).
/// Always held in lowest terms with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RateValue(Rational);

impl RateValue {
    pub fn new(r: Rational) -> Self {
        RateValue(r)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        RateValue(Rational::new(num, den))
    }

    pub fn integer(v: i64) -> Self {
        RateValue(Rational::from_integer(v))
    }

    pub fn value(self) -> Rational {
        self.0
    }

    pub fn numer(self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(self) -> i64 {
        *self.0.denom()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn abs(self) -> Self {
        RateValue(self.0.abs())
    }

    pub fn decimal(self) -> String {
        decimal_string(&self.0, 6)
    }
}

impl From<Rational> for RateValue {
    fn from(r: Rational) -> Self {
        RateValue(r)
    }
}

impl std::ops::Sub for RateValue {
    type Output = RateValue;
    fn sub(self, rhs: Self) -> Self {
        RateValue(self.0 - rhs.0)
    }
}

impl std::ops::Add for RateValue {
    type Output = RateValue;
    fn add(self, rhs: Self) -> Self {
        RateValue(self.0 + rhs.0)
    }
}

impl fmt::Display for RateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl FromStr for RateValue {
    type Err = RationalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(RateValue)
    }
}

impl Serialize for RateValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("RateValue", 2)?;
        st.serialize_field("exact", &self.to_string())?;
        st.serialize_field("decimal", &self.decimal())?;
        st.end()
    }
}
