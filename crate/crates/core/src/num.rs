//! Exact numeric types: rational probabilities and decimal payoffs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Error produced when a numeric literal cannot be read.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("malformed decimal literal `{0}`")]
    Decimal(String),
    #[error("malformed rational literal `{0}`")]
    Rational(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `num/den` or a plain integer `n` (shorthand for `n/1`).
pub fn parse_rational(text: &str) -> Result<Rational, NumError> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let is_int = |s: &str| {
        let digits = s.strip_prefix('-').unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !den.bytes().all(|b| b.is_ascii_digit()) || den.is_empty() {
        return Err(NumError::Rational(text.to_string()));
    }
    let num: BigInt = num.parse().map_err(|_| NumError::Rational(text.to_string()))?;
    let den: BigInt = den.parse().map_err(|_| NumError::Rational(text.to_string()))?;
    if den.is_zero() {
        return Err(NumError::ZeroDenominator(text.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Renders a rational as `num/den`, or `num` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    // Both parts may exceed f64 range individually; scale down first.
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.denom().bits().saturating_sub(1000) as usize;
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// An exact decimal number such as `-1`, `0.5` or `2020`.
///
/// Values are canonical: no trailing fractional zeros and no negative zero,
/// so structural equality coincides with numeric equality and the textual
/// form of canonical literals is preserved byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    unscaled: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn zero() -> Self {
        Decimal {
            unscaled: BigInt::zero(),
            scale: 0,
        }
    }

    pub fn from_int(value: i64) -> Self {
        Decimal {
            unscaled: BigInt::from(value),
            scale: 0,
        }
    }

    fn canonical(mut unscaled: BigInt, mut scale: u32) -> Self {
        let ten = BigInt::from(10);
        while scale > 0 && (&unscaled % &ten).is_zero() {
            unscaled /= &ten;
            scale -= 1;
        }
        if unscaled.is_zero() {
            scale = 0;
        }
        Decimal { unscaled, scale }
    }

    /// Number of digits after the decimal point.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_integer(&self) -> bool {
        self.scale == 0
    }

    pub fn to_bigint(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.unscaled.clone())
    }

    /// Returns the value as a non-negative machine integer if it is one.
    pub fn to_u64(&self) -> Option<u64> {
        self.to_bigint()?.to_u64()
    }

    pub fn to_rational(&self) -> Rational {
        let den = num_traits::pow(BigInt::from(10), self.scale as usize);
        Rational::new(self.unscaled.clone(), den)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.to_rational())
    }

    /// Converts a rational with a terminating decimal expansion.
    pub fn from_rational(r: &Rational) -> Option<Self> {
        let mut den = r.denom().clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let (mut twos, mut fives) = (0u32, 0u32);
        while den.is_even() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        if !den.is_one() {
            return None;
        }
        let scale = twos.max(fives);
        let factor = num_traits::pow(BigInt::from(10), scale as usize) / r.denom();
        Some(Decimal::canonical(r.numer() * factor, scale))
    }
}

impl From<i64> for Decimal {
    fn from(value: i64) -> Self {
        Decimal::from_int(value)
    }
}

impl From<u64> for Decimal {
    fn from(value: u64) -> Self {
        Decimal {
            unscaled: BigInt::from(value),
            scale: 0,
        }
    }
}

impl FromStr for Decimal {
    type Err = NumError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || NumError::Decimal(text.to_string());
        let body = text.strip_prefix('-').unwrap_or(text);
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty()
            || !digits_ok(int_part)
            || !digits_ok(frac_part)
            || (body.contains('.') && frac_part.is_empty())
        {
            return Err(err());
        }
        if frac_part.is_empty() && int_part.len() <= 18 {
            // Fits an i64; skips the big-integer parser for vertex indices.
            let v: i64 = int_part.parse().map_err(|_| err())?;
            return Ok(Decimal::from_int(if text.starts_with('-') { -v } else { v }));
        }
        let magnitude = BigUint::parse_bytes(format!("{int_part}{frac_part}").as_bytes(), 10)
            .ok_or_else(err)?;
        let sign = if text.starts_with('-') {
            Sign::Minus
        } else {
            Sign::Plus
        };
        let scale = u32::try_from(frac_part.len()).map_err(|_| err())?;
        Ok(Decimal::canonical(BigInt::from_biguint(sign, magnitude), scale))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return match self.unscaled.to_i64() {
                Some(v) => write!(f, "{v}"),
                None => write!(f, "{}", self.unscaled),
            };
        }
        let digits = self.unscaled.abs().to_string();
        let scale = self.scale as usize;
        let padded = if digits.len() <= scale {
            format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = padded.split_at(padded.len() - scale);
        let sign = if self.unscaled.is_negative() { "-" } else { "" };
        write!(f, "{sign}{int_part}.{frac_part}")
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_rational().cmp(&other.to_rational())
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
