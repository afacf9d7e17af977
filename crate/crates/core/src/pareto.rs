//! Plan shortlisting: Pareto dominance over fitted `(f, v)` pairs and a
//! pointwise cheapest-plan table over a capacity grid.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::fitting::SampleGrid;
use crate::tariff::{self, CapacityGB, Currency, PricingPlan, TariffError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("plan id {0:?} appears more than once")]
    DuplicateId(String),
    #[error("score for {0:?} must be finite and non-negative")]
    InvalidScore(String),
    #[error("no plan covers {0} GB")]
    NoPlanCoversX(String),
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error("tie tolerance must be non-negative")]
    NegativeTolerance,
    #[error(transparent)]
    Tariff(#[from] TariffError),
}

/// Two-part parameters of one plan: fixed monthly fee `f` and marginal price
/// `v` per GB per month, in a common currency.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanScore {
    pub plan_id: String,
    pub f: f64,
    pub v: f64,
}

impl PlanScore {
    pub fn new(plan_id: impl Into<String>, f: f64, v: f64) -> Result<Self, CompareError> {
        let plan_id = plan_id.into();
        if !(f.is_finite() && v.is_finite() && f >= 0.0 && v >= 0.0) {
            return Err(CompareError::InvalidScore(plan_id));
        }
        Ok(PlanScore { plan_id, f, v })
    }
}

/// `a` is no worse than `b` on both the fixed fee and the marginal price, and
/// strictly better on at least one.
pub fn dominates(a: &PlanScore, b: &PlanScore) -> bool {
    a.f <= b.f && a.v <= b.v && (a.f < b.f || a.v < b.v)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DominanceReport {
    /// Plans dominated by no other plan.
    pub frontier: BTreeSet<String>,
    /// Every other plan, with all plans dominating it.
    pub dominated: BTreeMap<String, BTreeSet<String>>,
}

pub fn pareto_frontier(scores: &[PlanScore]) -> Result<DominanceReport, CompareError> {
    let mut seen = BTreeSet::new();
    for score in scores {
        if !seen.insert(score.plan_id.as_str()) {
            return Err(CompareError::DuplicateId(score.plan_id.clone()));
        }
    }
    let mut report = DominanceReport::default();
    for candidate in scores {
        let dominators: BTreeSet<String> =
            scores.iter().filter(|other| dominates(other, candidate)).map(|other| other.plan_id.clone()).collect();
        if dominators.is_empty() {
            report.frontier.insert(candidate.plan_id.clone());
        } else {
            report.dominated.insert(candidate.plan_id.clone(), dominators);
        }
    }
    Ok(report)
}

/// How close to the minimum a plan's price must be to count as a tie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TieTolerance {
    /// Slack on the total monthly price.
    Total(BigRational),
    /// Slack on the unit price; at `x` GB it allows `x` times as much on the total.
    PerGb(BigRational),
}

impl TieTolerance {
    /// 0.001 per GB per month, the resolution below which unit prices are
    /// treated as equal.
    pub fn default_unit() -> Self {
        TieTolerance::PerGb(BigRational::new(1.into(), 1000.into()))
    }

    /// 1e-9 on the total, for exact-price ties.
    pub fn default_total() -> Self {
        TieTolerance::Total(BigRational::new(1.into(), 1_000_000_000.into()))
    }

    /// Only exactly equal prices tie.
    pub fn zero() -> Self {
        TieTolerance::Total(BigRational::zero())
    }

    fn on_total(&self, x: &CapacityGB) -> Result<BigRational, CompareError> {
        let slack = match self {
            TieTolerance::Total(t) => t.clone(),
            TieTolerance::PerGb(t) => t * x.gb(),
        };
        if slack.is_negative() {
            return Err(CompareError::NegativeTolerance);
        }
        Ok(slack)
    }
}

fn check_unique(catalog: &[PricingPlan]) -> Result<(), CompareError> {
    let mut seen = BTreeSet::new();
    for plan in catalog {
        if !seen.insert(plan.id.as_str()) {
            return Err(CompareError::DuplicateId(plan.id.clone()));
        }
    }
    Ok(())
}

fn winners_at(
    catalog: &[PricingPlan],
    x: &CapacityGB,
    tie: &TieTolerance,
    currency: Currency,
) -> Result<Option<BTreeSet<String>>, CompareError> {
    if x.is_zero() {
        return Err(CompareError::ZeroCapacity);
    }
    let slack = tie.on_total(x)?;
    let mut priced = Vec::new();
    for plan in catalog {
        match tariff::total_price(plan, x) {
            Ok(price) => priced.push((plan.id.as_str(), price.convert(currency).amount().clone())),
            Err(TariffError::CapacityExceeded { .. } | TariffError::Unpriceable) => {}
            Err(other) => return Err(other.into()),
        }
    }
    let Some(min) = priced.iter().map(|(_, p)| p).min().cloned() else {
        return Ok(None);
    };
    let limit = min + slack;
    Ok(Some(priced.into_iter().filter(|(_, p)| p <= &limit).map(|(id, _)| id.to_string()).collect()))
}

/// Plans whose total monthly price at `x` GB, converted to `currency`, is
/// within the tie tolerance of the cheapest. Plans that cannot hold `x` GB or
/// publish no fees are skipped.
pub fn cheapest_per_point(
    catalog: &[PricingPlan],
    x: &CapacityGB,
    tie: &TieTolerance,
    currency: Currency,
) -> Result<BTreeSet<String>, CompareError> {
    check_unique(catalog)?;
    winners_at(catalog, x, tie, currency)?.ok_or_else(|| CompareError::NoPlanCoversX(x.to_string()))
}

/// A run of consecutive grid points sharing one winner set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheapestBracket {
    pub from: CapacityGB,
    pub to: CapacityGB,
    pub winners: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheapestTable {
    pub brackets: Vec<CheapestBracket>,
}

impl CheapestTable {
    /// Winner set for the bracket containing `x`.
    pub fn winners_at(&self, x: &CapacityGB) -> Option<&BTreeSet<String>> {
        self.brackets.iter().find(|b| &b.from <= x && x <= &b.to).map(|b| &b.winners)
    }
}

/// Like [`CheapestBracket`], except `winners` is `None` where no plan covers
/// the capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageBracket {
    pub from: CapacityGB,
    pub to: CapacityGB,
    pub winners: Option<BTreeSet<String>>,
}

/// Winner sets on every grid point, merged into brackets of exactly equal
/// sets. Uncovered points become brackets with no winners.
pub fn cheapest_coverage(
    catalog: &[PricingPlan],
    grid: &SampleGrid,
    tie: &TieTolerance,
    currency: Currency,
) -> Result<Vec<CoverageBracket>, CompareError> {
    check_unique(catalog)?;
    let xs = grid.points();
    let sets: Vec<Option<BTreeSet<String>>> =
        xs.par_iter().map(|x| winners_at(catalog, x, tie, currency)).collect::<Result<_, _>>()?;
    let mut brackets: Vec<CoverageBracket> = Vec::new();
    for (x, winners) in xs.into_iter().zip(sets) {
        match brackets.last_mut() {
            Some(last) if last.winners == winners => last.to = x,
            _ => brackets.push(CoverageBracket { from: x.clone(), to: x, winners }),
        }
    }
    Ok(brackets)
}

/// [`cheapest_per_point`] over a grid, merged into brackets. Fails if any grid
/// point is covered by no plan.
pub fn cheapest_table(
    catalog: &[PricingPlan],
    grid: &SampleGrid,
    tie: &TieTolerance,
    currency: Currency,
) -> Result<CheapestTable, CompareError> {
    let brackets = cheapest_coverage(catalog, grid, tie, currency)?
        .into_iter()
        .map(|b| match b.winners {
            Some(winners) => Ok(CheapestBracket { from: b.from, to: b.to, winners }),
            None => Err(CompareError::NoPlanCoversX(b.from.to_string())),
        })
        .collect::<Result<_, _>>()?;
    Ok(CheapestTable { brackets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tariff::{Bracket, BlockRateTariff, Money, PlanModel, Segment, TwoPartTariff};

    fn score(id: &str, f: f64, v: f64) -> PlanScore {
        PlanScore::new(id, f, v).unwrap()
    }

    fn ids(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn plan(id: &str, currency: Currency, model: PlanModel) -> PricingPlan {
        PricingPlan {
            id: id.into(),
            provider: id.into(),
            plan_name: id.into(),
            segment: Segment::Business,
            currency,
            model,
        }
    }

    fn two_part(id: &str, f: &str, v: &str) -> PricingPlan {
        let m = |s| Money::parse(s, Currency::Eur).unwrap();
        plan(id, Currency::Eur, PlanModel::TwoPart(TwoPartTariff::new(m(f), m(v)).unwrap()))
    }

    fn amazon() -> PricingPlan {
        let rows = [(1, "0.125"), (50, "0.110"), (500, "0.095"), (1000, "0.090"), (5000, "0.080")];
        let brackets = rows
            .iter()
            .map(|(tb, p)| Bracket { upper: CapacityGB::from_tb(*tb), marginal: Money::parse(p, Currency::Usd).unwrap() })
            .collect();
        plan("amazon", Currency::Usd, PlanModel::BlockRate(BlockRateTariff::new(brackets, true).unwrap()))
    }

    #[test]
    fn dominance_examples() {
        let google = score("google", 1.298, 0.0532);
        let sugarsync = score("sugarsync", 3.231, 0.089);
        let idrive = score("idrive", 3.42, 0.0217);
        assert!(dominates(&google, &sugarsync));
        assert!(!dominates(&idrive, &google));
        assert!(!dominates(&google, &idrive));
        assert!(!dominates(&score("a", 1.0, 1.0), &score("b", 1.0, 1.0)));
        assert!(dominates(&score("a", 1.0, 0.5), &score("b", 1.0, 1.0)));
    }

    #[test]
    fn frontier_of_singleton_and_duplicates() {
        let report = pareto_frontier(&[score("only", 1.0, 1.0)]).unwrap();
        assert_eq!(report.frontier, ids(&["only"]));
        assert!(report.dominated.is_empty());
        assert_eq!(
            pareto_frontier(&[score("a", 1.0, 1.0), score("a", 2.0, 2.0)]),
            Err(CompareError::DuplicateId("a".into()))
        );
        assert!(pareto_frontier(&[]).unwrap().frontier.is_empty());
    }

    #[test]
    fn equal_scores_both_stay_on_frontier() {
        let report = pareto_frontier(&[score("a", 1.0, 1.0), score("b", 1.0, 1.0)]).unwrap();
        assert_eq!(report.frontier, ids(&["a", "b"]));
    }

    #[test]
    fn invalid_scores_are_rejected() {
        assert!(PlanScore::new("x", -1.0, 0.0).is_err());
        assert!(PlanScore::new("x", 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn large_capacity_goes_to_the_low_marginal_plan() {
        let catalog = vec![two_part("dropbox-biz", "47.449", "0.0193"), amazon()];
        let winners = cheapest_per_point(&catalog, &CapacityGB::from_gb(10_000), &TieTolerance::default_total(), Currency::Eur)
            .unwrap();
        assert_eq!(winners, ids(&["dropbox-biz"]));
    }

    #[test]
    fn per_point_trivial_cases() {
        let single = vec![two_part("a", "1", "0.1")];
        let x = CapacityGB::from_gb(42);
        assert_eq!(cheapest_per_point(&single, &x, &TieTolerance::zero(), Currency::Eur).unwrap(), ids(&["a"]));
        let twins = vec![two_part("a", "1", "0.1"), two_part("b", "1", "0.1")];
        assert_eq!(cheapest_per_point(&twins, &x, &TieTolerance::zero(), Currency::Eur).unwrap(), ids(&["a", "b"]));
        let beyond = CapacityGB::from_gb(6_000_000);
        assert!(matches!(
            cheapest_per_point(&[amazon()], &beyond, &TieTolerance::zero(), Currency::Eur),
            Err(CompareError::NoPlanCoversX(_))
        ));
        assert_eq!(
            cheapest_per_point(&single, &CapacityGB::zero(), &TieTolerance::zero(), Currency::Eur),
            Err(CompareError::ZeroCapacity)
        );
    }

    #[test]
    fn crossover_splits_brackets() {
        // 10 + 0.01x = 1 + 0.1x at x = 100
        let catalog = vec![two_part("high-fee", "10", "0.01"), two_part("low-fee", "1", "0.1")];
        let grid = SampleGrid::from_gb(10, 200, 10).unwrap();
        let table = cheapest_table(&catalog, &grid, &TieTolerance::zero(), Currency::Eur).unwrap();
        let rows: Vec<(String, String, BTreeSet<String>)> =
            table.brackets.iter().map(|b| (b.from.to_string(), b.to.to_string(), b.winners.clone())).collect();
        assert_eq!(
            rows,
            vec![
                ("10".into(), "90".into(), ids(&["low-fee"])),
                ("100".into(), "100".into(), ids(&["high-fee", "low-fee"])),
                ("110".into(), "200".into(), ids(&["high-fee"])),
            ]
        );
    }

    #[test]
    fn constant_winner_gives_one_bracket() {
        let catalog = vec![two_part("cheap", "1", "0.01"), two_part("dear", "2", "0.02")];
        let grid = SampleGrid::from_gb(10, 1000, 10).unwrap();
        let table = cheapest_table(&catalog, &grid, &TieTolerance::zero(), Currency::Eur).unwrap();
        assert_eq!(table.brackets.len(), 1);
        assert_eq!(table.brackets[0].from, CapacityGB::from_gb(10));
        assert_eq!(table.brackets[0].to, CapacityGB::from_gb(1000));
    }

    #[test]
    fn unit_price_tolerance_merges_near_ties() {
        // unit prices differ by 0.0005 per GB everywhere
        let catalog = vec![two_part("a", "0", "0.0400"), two_part("b", "0", "0.0405")];
        let grid = SampleGrid::from_gb(30, 100, 10).unwrap();
        let table = cheapest_table(&catalog, &grid, &TieTolerance::default_unit(), Currency::Eur).unwrap();
        assert_eq!(table.brackets.len(), 1);
        assert_eq!(table.brackets[0].winners, ids(&["a", "b"]));
        let strict = cheapest_table(&catalog, &grid, &TieTolerance::zero(), Currency::Eur).unwrap();
        assert_eq!(strict.brackets[0].winners, ids(&["a"]));
    }

    #[test]
    fn coverage_marks_gaps() {
        let grid = SampleGrid::from_gb(4_000_000, 6_000_000, 1_000_000).unwrap();
        let coverage = cheapest_coverage(&[amazon()], &grid, &TieTolerance::zero(), Currency::Eur).unwrap();
        assert_eq!(coverage.len(), 2);
        assert_eq!(coverage[0].winners, Some(ids(&["amazon"])));
        assert_eq!(coverage[1].winners, None);
        assert!(cheapest_table(&[amazon()], &grid, &TieTolerance::zero(), Currency::Eur).is_err());
    }
}
