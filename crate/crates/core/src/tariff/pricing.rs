use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::models::{BlockRateTariff, BundlePlan, PerSeatPlan, PlanModel, PricingPlan, TwoPartTariff};
use super::money::{normalize_monthly, CapacityGB, Money};
use super::TariffError;

/// A sample of a unit-price curve: `price` per GB per month at `x` GB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitPricePoint {
    pub x: CapacityGB,
    pub price: Money,
}

fn exceeded(x: &CapacityGB, max: &CapacityGB) -> TariffError {
    TariffError::CapacityExceeded { requested: x.to_string(), max: max.to_string() }
}

/// Monthly price of the cheapest single package covering `x` GB; zero inside
/// the free allowance.
pub fn bundle_total_price(plan: &BundlePlan, x: &CapacityGB) -> Result<Money, TariffError> {
    let first = plan.tiers.first().ok_or(TariffError::NoPaidTiers)?;
    if x <= &plan.free_gb {
        return Ok(Money::zero(first.fee.currency()));
    }
    plan.tiers
        .iter()
        .find(|tier| &tier.cap >= x)
        .map(|tier| tier.monthly_fee())
        .ok_or_else(|| exceeded(x, &plan.max_capacity()))
}

/// Cumulative block-rate charge: every bracket below `x` is billed in full at
/// its marginal price, the bracket containing `x` only up to `x`.
pub fn block_rate_total_price(tariff: &BlockRateTariff, x: &CapacityGB) -> Result<Money, TariffError> {
    let first = tariff
        .brackets
        .first()
        .ok_or_else(|| TariffError::InvalidPlan("block-rate tariff needs at least one bracket".into()))?;
    let mut total = BigRational::zero();
    let mut lower = BigRational::zero();
    for bracket in &tariff.brackets {
        let upper = bracket.upper.gb();
        if x.gb() <= upper {
            total += bracket.marginal.amount() * (x.gb() - &lower);
            return Money::new(total, first.marginal.currency());
        }
        total += bracket.marginal.amount() * (upper - &lower);
        lower = upper.clone();
    }
    Err(exceeded(x, &tariff.max_capacity()))
}

/// `f + v * x`.
pub fn two_part_total_price(tariff: &TwoPartTariff, x: &CapacityGB) -> Money {
    let variable = tariff.marginal.scale(x.gb());
    Money::new(tariff.fixed_fee.amount() + variable.amount(), tariff.fixed_fee.currency())
        .expect("sum of non-negative amounts")
}

/// Monthly price for `users` seats.
pub fn per_seat_price(plan: &PerSeatPlan, users: u32) -> Result<Money, TariffError> {
    if users < plan.base_users {
        return Err(TariffError::TooFewUsers { requested: users, minimum: plan.base_users });
    }
    let extra = BigRational::from_integer(BigInt::from(users - plan.base_users));
    let yearly = plan.base_fee_yearly.checked_add(&plan.per_user_fee_yearly.scale(&extra))?;
    Ok(yearly.divide(&BigRational::from_integer(12.into())))
}

/// Unit price when the pooled capacity of `users` seats is fully used.
pub fn per_seat_unit_floor(plan: &PerSeatPlan, users: u32) -> Result<Money, TariffError> {
    let monthly = per_seat_price(plan, users)?;
    Ok(monthly.divide(plan.capacity_for(users).gb()))
}

/// Fewest seats whose pooled capacity holds `x` GB.
pub fn seats_for_capacity(plan: &PerSeatPlan, x: &CapacityGB) -> u32 {
    let ratio = x.gb() / plan.gb_per_user.gb();
    let needed = ratio.ceil().to_integer();
    let needed = if needed.is_zero() { 0 } else { needed.to_u32().unwrap_or(u32::MAX) };
    needed.max(plan.base_users)
}

/// Largest capacity the plan sells, `None` when unbounded.
pub fn max_capacity(plan: &PricingPlan) -> Option<CapacityGB> {
    match &plan.model {
        PlanModel::Bundle(b) => Some(b.max_capacity()),
        PlanModel::BlockRate(b) => Some(b.max_capacity()),
        PlanModel::CapacityOnly(c) => Some(c.caps.last().cloned().unwrap_or_else(|| c.free_gb.clone())),
        PlanModel::TwoPart(_) | PlanModel::PerSeat(_) | PlanModel::UnlimitedFlat(_) => None,
    }
}

/// Monthly charge for storing `x` GB under `plan`, in the plan's currency.
pub fn total_price(plan: &PricingPlan, x: &CapacityGB) -> Result<Money, TariffError> {
    match &plan.model {
        PlanModel::Bundle(b) => bundle_total_price(b, x),
        PlanModel::BlockRate(b) => block_rate_total_price(b, x),
        PlanModel::TwoPart(t) => Ok(two_part_total_price(t, x)),
        PlanModel::PerSeat(p) => per_seat_price(p, seats_for_capacity(p, x)),
        PlanModel::UnlimitedFlat(u) => Ok(normalize_monthly(&u.fee, u.period)),
        PlanModel::CapacityOnly(_) => Err(TariffError::Unpriceable),
    }
}

/// Monthly price per GB at `x` GB.
pub fn unit_price(plan: &PricingPlan, x: &CapacityGB) -> Result<Money, TariffError> {
    if matches!(plan.model, PlanModel::UnlimitedFlat(_)) {
        return Err(TariffError::UndefinedUnitPrice("plan has unlimited capacity"));
    }
    if x.is_zero() {
        return Err(TariffError::UndefinedUnitPrice("capacity is zero"));
    }
    Ok(total_price(plan, x)?.divide(x.gb()))
}

/// Unit prices at full use of each paid package, ascending by capacity. The
/// free allowance is left out.
pub fn local_minima(plan: &BundlePlan) -> Result<Vec<UnitPricePoint>, TariffError> {
    if plan.tiers.is_empty() {
        return Err(TariffError::NoPaidTiers);
    }
    plan.tiers
        .iter()
        .map(|tier| {
            if tier.cap.is_zero() {
                return Err(TariffError::InvalidPlan("tier cap must be positive".into()));
            }
            Ok(UnitPricePoint { x: tier.cap.clone(), price: tier.monthly_fee().divide(tier.cap.gb()) })
        })
        .collect()
}
