use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;

use super::money::{normalize_monthly, CapacityGB, Currency, Money};
use super::TariffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BillingPeriod {
    Monthly,
    Yearly,
}

impl BillingPeriod {
    pub fn keyword(self) -> &'static str {
        match self {
            BillingPeriod::Monthly => "monthly",
            BillingPeriod::Yearly => "yearly",
        }
    }
}

impl FromStr for BillingPeriod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monthly" => Ok(BillingPeriod::Monthly),
            "yearly" => Ok(BillingPeriod::Yearly),
            _ => Err(format!("unknown billing period {s:?} (expected monthly or yearly)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Consumer,
    Business,
}

impl Segment {
    pub fn keyword(self) -> &'static str {
        match self {
            Segment::Consumer => "consumer",
            Segment::Business => "business",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "consumer" => Ok(Segment::Consumer),
            "business" => Ok(Segment::Business),
            _ => Err(format!("unknown segment {s:?} (expected consumer or business)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A broken invariant found while checking a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

impl Issue {
    fn error(message: impl Into<String>) -> Self {
        Issue { severity: Severity::Error, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Issue { severity: Severity::Warning, message: message.into() }
    }
}

fn reject_errors(issues: Vec<Issue>) -> Result<(), TariffError> {
    match issues.into_iter().find(|i| i.severity == Severity::Error) {
        Some(issue) => Err(TariffError::InvalidPlan(issue.message)),
        None => Ok(()),
    }
}

fn strictly_increasing<T: Ord>(values: impl IntoIterator<Item = T>) -> bool {
    let values: Vec<T> = values.into_iter().collect();
    values.windows(2).all(|w| w[0] < w[1])
}

fn currency_issues<'a>(expected: Currency, amounts: impl IntoIterator<Item = &'a Money>) -> Vec<Issue> {
    amounts
        .into_iter()
        .filter(|m| m.currency() != expected)
        .map(|m| Issue::error(format!("amount in {} inside a {expected} plan", m.currency())))
        .collect()
}

/// One package of a bundled offer: up to `cap` GB for `fee` per `period`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleTier {
    pub cap: CapacityGB,
    pub fee: Money,
    pub period: BillingPeriod,
}

impl BundleTier {
    pub fn monthly_fee(&self) -> Money {
        normalize_monthly(&self.fee, self.period)
    }
}

/// Quantity-discount bundles. The customer buys the cheapest single package
/// that covers the need; packages are never stacked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundlePlan {
    pub free_gb: CapacityGB,
    pub tiers: Vec<BundleTier>,
}

impl BundlePlan {
    pub fn new(free_gb: CapacityGB, tiers: Vec<BundleTier>) -> Result<Self, TariffError> {
        let plan = BundlePlan { free_gb, tiers };
        reject_errors(plan.issues())?;
        Ok(plan)
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if !strictly_increasing(self.tiers.iter().map(|t| &t.cap)) {
            issues.push(Issue::error("tiers not strictly increasing"));
        }
        if let Some(first) = self.tiers.first() {
            let currency = first.fee.currency();
            issues.extend(currency_issues(currency, self.tiers.iter().map(|t| &t.fee)));
            let fees: Vec<BigRational> = self.tiers.iter().map(|t| t.monthly_fee().amount().clone()).collect();
            if !strictly_increasing(fees.iter()) {
                issues.push(Issue::error("tier fees not strictly increasing"));
            }
            if self.free_gb >= first.cap {
                issues.push(Issue::error("free_gb must be below the first tier cap"));
            }
        }
        issues
    }

    pub fn max_capacity(&self) -> CapacityGB {
        self.tiers.last().map(|t| t.cap.clone()).unwrap_or_else(|| self.free_gb.clone())
    }
}

/// One bracket of a block-rate tariff: consumption up to `upper` GB is
/// charged `marginal` per GB per month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub upper: CapacityGB,
    pub marginal: Money,
}

/// Block-rate (taper) tariff. `declining` marks tariffs whose marginal prices
/// must not rise from one bracket to the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRateTariff {
    pub brackets: Vec<Bracket>,
    pub declining: bool,
}

impl BlockRateTariff {
    pub fn new(brackets: Vec<Bracket>, declining: bool) -> Result<Self, TariffError> {
        let tariff = BlockRateTariff { brackets, declining };
        reject_errors(tariff.issues())?;
        Ok(tariff)
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let Some(first) = self.brackets.first() else {
            return vec![Issue::error("block-rate tariff needs at least one bracket")];
        };
        if first.upper.is_zero() || !strictly_increasing(self.brackets.iter().map(|b| &b.upper)) {
            issues.push(Issue::error("breakpoints not strictly increasing"));
        }
        issues.extend(currency_issues(first.marginal.currency(), self.brackets.iter().map(|b| &b.marginal)));
        if self.brackets.iter().any(|b| b.marginal.is_zero()) {
            issues.push(Issue::error("marginal prices must be strictly positive"));
        }
        if self.declining && self.brackets.windows(2).any(|w| w[1].marginal.amount() > w[0].marginal.amount()) {
            issues.push(Issue::error("marginal prices not non-increasing in a declining tariff"));
        }
        issues
    }

    pub fn max_capacity(&self) -> CapacityGB {
        self.brackets.last().map(|b| b.upper.clone()).unwrap_or_else(CapacityGB::zero)
    }
}

/// Fixed monthly fee plus a constant price per GB per month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoPartTariff {
    pub fixed_fee: Money,
    pub marginal: Money,
}

impl TwoPartTariff {
    pub fn new(fixed_fee: Money, marginal: Money) -> Result<Self, TariffError> {
        let tariff = TwoPartTariff { fixed_fee, marginal };
        reject_errors(tariff.issues())?;
        Ok(tariff)
    }

    pub fn issues(&self) -> Vec<Issue> {
        currency_issues(self.fixed_fee.currency(), [&self.marginal])
    }
}

/// Price driven by the number of users, with storage granted per user.
///
/// The yearly price for `k` users is
/// `base_fee_yearly + per_user_fee_yearly * (k - base_users)`, and the pooled
/// capacity is `gb_per_user * k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerSeatPlan {
    pub base_users: u32,
    pub base_fee_yearly: Money,
    pub per_user_fee_yearly: Money,
    pub gb_per_user: CapacityGB,
    /// Advertised capacity of the base package, when stated separately.
    pub base_capacity: Option<CapacityGB>,
}

impl PerSeatPlan {
    pub fn new(
        base_users: u32,
        base_fee_yearly: Money,
        per_user_fee_yearly: Money,
        gb_per_user: CapacityGB,
        base_capacity: Option<CapacityGB>,
    ) -> Result<Self, TariffError> {
        let plan = PerSeatPlan { base_users, base_fee_yearly, per_user_fee_yearly, gb_per_user, base_capacity };
        reject_errors(plan.issues())?;
        Ok(plan)
    }

    pub fn capacity_for(&self, users: u32) -> CapacityGB {
        CapacityGB::new(self.gb_per_user.gb() * BigRational::from_integer(users.into()))
            .expect("product of non-negative values")
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = currency_issues(self.base_fee_yearly.currency(), [&self.per_user_fee_yearly]);
        if self.base_users < 1 {
            issues.push(Issue::error("base_users must be at least 1"));
        }
        if self.gb_per_user.is_zero() {
            issues.push(Issue::error("gb_per_user must be positive"));
        }
        if let Some(base) = &self.base_capacity {
            let implied = self.capacity_for(self.base_users);
            if &implied != base {
                issues.push(Issue::warning(format!(
                    "base capacity {base} GB differs from gb_per_user x base_users = {implied} GB"
                )));
            }
        }
        issues
    }
}

/// Flat fee with no advertised capacity limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnlimitedFlat {
    pub fee: Money,
    pub period: BillingPeriod,
}

/// Package capacities whose fees are not published in text form. Kept for
/// reference; never priced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityOnlyPlan {
    pub free_gb: CapacityGB,
    pub caps: Vec<CapacityGB>,
}

impl CapacityOnlyPlan {
    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        if !strictly_increasing(self.caps.iter()) {
            issues.push(Issue::error("tiers not strictly increasing"));
        }
        if self.caps.first().is_some_and(|first| &self.free_gb >= first) {
            issues.push(Issue::error("free_gb must be below the first tier cap"));
        }
        issues
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanModel {
    Bundle(BundlePlan),
    BlockRate(BlockRateTariff),
    TwoPart(TwoPartTariff),
    PerSeat(PerSeatPlan),
    UnlimitedFlat(UnlimitedFlat),
    CapacityOnly(CapacityOnlyPlan),
}

impl PlanModel {
    pub fn keyword(&self) -> &'static str {
        match self {
            PlanModel::Bundle(_) | PlanModel::CapacityOnly(_) => "bundle",
            PlanModel::BlockRate(_) => "block_rate",
            PlanModel::TwoPart(_) => "two_part",
            PlanModel::PerSeat(_) => "per_seat",
            PlanModel::UnlimitedFlat(_) => "unlimited_flat",
        }
    }
}

/// A provider's offer to one market segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricingPlan {
    pub id: String,
    pub provider: String,
    pub plan_name: String,
    pub segment: Segment,
    pub currency: Currency,
    pub model: PlanModel,
}

impl PricingPlan {
    /// Whether total prices can be evaluated at all.
    pub fn is_priceable(&self) -> bool {
        !matches!(self.model, PlanModel::CapacityOnly(_))
    }

    /// Whether a unit-price curve exists (priced and capacity-limited per GB).
    pub fn has_unit_price(&self) -> bool {
        !matches!(self.model, PlanModel::CapacityOnly(_) | PlanModel::UnlimitedFlat(_))
    }

    pub fn issues(&self) -> Vec<Issue> {
        let mut issues = match &self.model {
            PlanModel::Bundle(b) => b.issues(),
            PlanModel::BlockRate(b) => b.issues(),
            PlanModel::TwoPart(t) => t.issues(),
            PlanModel::PerSeat(p) => p.issues(),
            PlanModel::UnlimitedFlat(_) => Vec::new(),
            PlanModel::CapacityOnly(c) => c.issues(),
        };
        let amounts: Vec<&Money> = match &self.model {
            PlanModel::Bundle(b) => b.tiers.iter().map(|t| &t.fee).collect(),
            PlanModel::BlockRate(b) => b.brackets.iter().map(|b| &b.marginal).collect(),
            PlanModel::TwoPart(t) => vec![&t.fixed_fee, &t.marginal],
            PlanModel::PerSeat(p) => vec![&p.base_fee_yearly, &p.per_user_fee_yearly],
            PlanModel::UnlimitedFlat(u) => vec![&u.fee],
            PlanModel::CapacityOnly(_) => Vec::new(),
        };
        if amounts.iter().any(|m| m.currency() != self.currency) {
            issues.push(Issue::error(format!("plan declares {} but carries amounts in another currency", self.currency)));
        }
        issues
    }
}
