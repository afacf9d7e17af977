//! Evaluation of storage pricing models.
//!
//! Every amount is an exact rational. Fees keep the billing period they were
//! advertised with and are normalized to a month only when a price is
//! evaluated.

mod models;
mod money;
mod pricing;

use thiserror::Error;

pub use models::{
    BillingPeriod, BlockRateTariff, Bracket, BundlePlan, BundleTier, CapacityOnlyPlan, Issue, PerSeatPlan,
    PlanModel, PricingPlan, Segment, Severity, TwoPartTariff, UnlimitedFlat,
};
pub use money::{convert_currency, normalize_monthly, CapacityGB, Currency, Money, usd_per_eur, GB_PER_TB};
pub use pricing::{
    block_rate_total_price, bundle_total_price, local_minima, max_capacity, per_seat_price, per_seat_unit_floor,
    seats_for_capacity, total_price, two_part_total_price, unit_price, UnitPricePoint,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TariffError {
    #[error("amount must be non-negative, got {0}")]
    NegativeAmount(String),
    #[error("currency mismatch: {left} vs {right}")]
    CurrencyMismatch { left: Currency, right: Currency },
    #[error("capacity {requested} GB exceeds the plan maximum of {max} GB")]
    CapacityExceeded { requested: String, max: String },
    #[error("unit price is undefined: {0}")]
    UndefinedUnitPrice(&'static str),
    #[error("{requested} users is below the plan minimum of {minimum}")]
    TooFewUsers { requested: u32, minimum: u32 },
    #[error("plan has no paid tiers")]
    NoPaidTiers,
    #[error("plan publishes capacities only, no fees")]
    Unpriceable,
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
