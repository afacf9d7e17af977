use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::models::BillingPeriod;
use super::TariffError;
use crate::decimal::{self, format_fixed};

/// Gigabytes per terabyte. Decimal units throughout.
pub const GB_PER_TB: i64 = 1000;

/// Fixed exchange rate: US dollars per euro.
pub fn usd_per_eur() -> BigRational {
    BigRational::new(13.into(), 10.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Currency {
    Eur,
    Usd,
}

impl Currency {
    pub fn code(self) -> &'static str {
        match self {
            Currency::Eur => "EUR",
            Currency::Usd => "USD",
        }
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Currency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EUR" => Ok(Currency::Eur),
            "USD" => Ok(Currency::Usd),
            _ => Err(format!("unknown currency {s:?} (expected EUR or USD)")),
        }
    }
}

/// A non-negative amount of money in one currency.
///
/// Whether it is a lump fee, a monthly charge or a price per GB per month is
/// decided by the context that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Money {
    amount: BigRational,
    currency: Currency,
}

impl Money {
    pub fn new(amount: BigRational, currency: Currency) -> Result<Self, TariffError> {
        if amount.is_negative() {
            return Err(TariffError::NegativeAmount(format_fixed(&amount, 6)));
        }
        Ok(Money { amount, currency })
    }

    pub fn zero(currency: Currency) -> Self {
        Money { amount: BigRational::zero(), currency }
    }

    /// Parses a decimal literal such as `"9.99"`.
    pub fn parse(text: &str, currency: Currency) -> Result<Self, TariffError> {
        let amount = decimal::parse_decimal(text).map_err(|e| TariffError::InvalidPlan(e.to_string()))?;
        Money::new(amount, currency)
    }

    pub fn amount(&self) -> &BigRational {
        &self.amount
    }

    pub fn currency(&self) -> Currency {
        self.currency
    }

    pub fn is_zero(&self) -> bool {
        self.amount.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        decimal::to_f64(&self.amount)
    }

    pub fn checked_add(&self, other: &Money) -> Result<Money, TariffError> {
        self.same_currency(other)?;
        Ok(Money { amount: &self.amount + &other.amount, currency: self.currency })
    }

    /// `self - other`, rejected if the result would be negative.
    pub fn checked_sub(&self, other: &Money) -> Result<Money, TariffError> {
        self.same_currency(other)?;
        Money::new(&self.amount - &other.amount, self.currency)
    }

    /// Multiplies by a non-negative factor.
    ///
    /// # Panics
    /// If `factor` is negative.
    pub fn scale(&self, factor: &BigRational) -> Money {
        assert!(!factor.is_negative(), "money scaled by a negative factor");
        Money { amount: &self.amount * factor, currency: self.currency }
    }

    /// Divides by a strictly positive divisor.
    ///
    /// # Panics
    /// If `divisor` is not strictly positive.
    pub fn divide(&self, divisor: &BigRational) -> Money {
        assert!(divisor.is_positive(), "money divided by a non-positive value");
        Money { amount: &self.amount / divisor, currency: self.currency }
    }

    pub fn convert(&self, target: Currency) -> Money {
        convert_currency(self, target)
    }

    fn same_currency(&self, other: &Money) -> Result<(), TariffError> {
        if self.currency != other.currency {
            return Err(TariffError::CurrencyMismatch { left: self.currency, right: other.currency });
        }
        Ok(())
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", format_fixed(&self.amount, 4), self.currency)
    }
}

/// Converts at the fixed rate 1 EUR = 1.3 USD, without rounding.
pub fn convert_currency(m: &Money, target: Currency) -> Money {
    let amount = match (m.currency, target) {
        (a, b) if a == b => m.amount.clone(),
        (Currency::Eur, Currency::Usd) => &m.amount * usd_per_eur(),
        (Currency::Usd, Currency::Eur) => &m.amount / usd_per_eur(),
        _ => unreachable!(),
    };
    Money { amount, currency: target }
}

/// Fee charged per month: yearly fees are spread over exactly 12 months.
pub fn normalize_monthly(fee: &Money, period: BillingPeriod) -> Money {
    match period {
        BillingPeriod::Monthly => fee.clone(),
        BillingPeriod::Yearly => fee.divide(&BigRational::from_integer(BigInt::from(12))),
    }
}

/// A non-negative storage capacity in (decimal) gigabytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CapacityGB(BigRational);

impl CapacityGB {
    pub fn new(gb: BigRational) -> Result<Self, TariffError> {
        if gb.is_negative() {
            return Err(TariffError::NegativeAmount(format_fixed(&gb, 6)));
        }
        Ok(CapacityGB(gb))
    }

    pub fn zero() -> Self {
        CapacityGB(BigRational::zero())
    }

    pub fn from_gb(gb: u64) -> Self {
        CapacityGB(BigRational::from_integer(gb.into()))
    }

    pub fn from_tb(tb: u64) -> Self {
        CapacityGB(BigRational::from_integer(BigInt::from(tb) * GB_PER_TB))
    }

    pub fn parse(text: &str) -> Result<Self, TariffError> {
        let gb = decimal::parse_decimal(text).map_err(|e| TariffError::InvalidPlan(e.to_string()))?;
        CapacityGB::new(gb)
    }

    pub fn gb(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        decimal::to_f64(&self.0)
    }
}

impl fmt::Display for CapacityGB {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match decimal::format_exact(&self.0) {
            Some(text) => f.write_str(&text),
            None => f.write_str(&format_fixed(&self.0, 4)),
        }
    }
}
