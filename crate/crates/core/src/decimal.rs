//! Conversions between exact rationals and decimal text.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed decimal number {0:?}")]
pub struct DecimalError(pub String);

/// Parses a plain decimal literal (`-12`, `0.125`, `.5`) into an exact rational.
///
/// Exponents, thousands separators and `,` as decimal mark are rejected.
pub fn parse_decimal(text: &str) -> Result<BigRational, DecimalError> {
    let err = || DecimalError(text.to_string());
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Renders `value` rounded half away from zero to `places` decimals.
pub fn format_fixed(value: &BigRational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.abs() * BigRational::from_integer(scale.clone());
    let rounded = (scaled + BigRational::new(1.into(), 2.into())).floor().to_integer();
    let int_part = &rounded / &scale;
    let frac_part = &rounded % &scale;
    let sign = if value.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = places)
    }
}

/// Renders `value` exactly as a terminating decimal, or `None` when its
/// reduced denominator has a prime factor other than 2 or 5.
pub fn format_exact(value: &BigRational) -> Option<String> {
    let mut denom = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if denom != BigInt::from(1) {
        return None;
    }
    let places = twos.max(fives);
    let mut text = format_fixed(value, places);
    if text.contains('.') {
        while text.ends_with('0') {
            text.pop();
        }
        if text.ends_with('.') {
            text.pop();
        }
    }
    Some(text)
}

/// Nearest double to `value`.
pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational image of a finite double.
pub fn from_f64(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(parse_decimal("0.125").unwrap(), r(1, 8));
        assert_eq!(parse_decimal("795").unwrap(), r(795, 1));
        assert_eq!(parse_decimal(".5").unwrap(), r(1, 2));
        assert_eq!(parse_decimal("-2.50").unwrap(), r(-5, 2));
        assert_eq!(parse_decimal("7.").unwrap(), r(7, 1));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", ".", "1,5", "1e3", "1 000", "abc", "--1", "1.2.3"] {
            assert!(parse_decimal(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn fixed_rounding_is_half_away_from_zero() {
        assert_eq!(format_fixed(&r(1, 8), 2), "0.13");
        assert_eq!(format_fixed(&r(-1, 8), 2), "-0.13");
        assert_eq!(format_fixed(&r(999, 6500), 4), "0.1537");
        assert_eq!(format_fixed(&r(265, 4), 4), "66.2500");
        assert_eq!(format_fixed(&r(-1, 100_000), 4), "0.0000");
        assert_eq!(format_fixed(&r(5, 1), 0), "5");
    }

    #[test]
    fn exact_rendering() {
        assert_eq!(format_exact(&r(1, 8)).unwrap(), "0.125");
        assert_eq!(format_exact(&r(30, 1)).unwrap(), "30");
        assert_eq!(format_exact(&r(-3, 20)).unwrap(), "-0.15");
        assert!(format_exact(&r(1, 3)).is_none());
    }
}
