//! Pricing models for cloud storage offers.
//!
//! The crate evaluates bundled, block-rate, two-part, per-seat and flat-fee
//! storage plans with exact rational arithmetic, fits a two-part tariff
//! (fixed fee plus marginal price) to a plan's unit-price curve by least
//! squares, and shortlists plans through Pareto dominance or a pointwise
//! cheapest-provider table.
//!
//! ```
//! use cloud_tariff::tariff::{CapacityGB, Currency, Money, TwoPartTariff, two_part_total_price};
//!
//! let plan = TwoPartTariff::new(
//!     Money::parse("47.449", Currency::Eur).unwrap(),
//!     Money::parse("0.0193", Currency::Eur).unwrap(),
//! )
//! .unwrap();
//! let total = two_part_total_price(&plan, &CapacityGB::from_gb(10_000));
//! assert_eq!(total.to_string(), "240.4490 EUR");
//! ```

pub mod catalog;
pub mod decimal;
pub mod fitting;
pub mod pareto;
pub mod tariff;

pub use catalog::{parse_catalog, validate, Catalog, Diagnostic, Severity};
pub use fitting::{brute_force_fit, fit_two_part, residual_q, sample_unit_curve, FitPoint, SampleGrid, TwoPartFit};
pub use pareto::{cheapest_per_point, cheapest_table, dominates, pareto_frontier, DominanceReport, PlanScore};
pub use tariff::{CapacityGB, Currency, Money, PricingPlan, TariffError};
