use cloud_tariff::catalog::Catalog;
use cloud_tariff::tariff::{
    self, BillingPeriod, BlockRateTariff, Bracket, BundlePlan, BundleTier, CapacityGB, Currency, Money, PerSeatPlan,
    PlanModel, PricingPlan, Segment, TwoPartTariff,
};
use num_rational::BigRational;
use proptest::prelude::*;

fn rational(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn gb(n: u64, d: u64) -> CapacityGB {
    CapacityGB::new(rational(n, d)).unwrap()
}

fn money(n: u64, d: u64) -> Money {
    Money::new(rational(n, d), Currency::Usd).unwrap()
}

fn wrap(model: PlanModel) -> PricingPlan {
    PricingPlan {
        id: "p".into(),
        provider: "p".into(),
        plan_name: "p".into(),
        segment: Segment::Consumer,
        currency: Currency::Usd,
        model,
    }
}

fn amazon() -> BlockRateTariff {
    match &Catalog::shipped().get("amazon-s3-standard").unwrap().model {
        PlanModel::BlockRate(b) => b.clone(),
        _ => unreachable!(),
    }
}

/// Random declining block-rate tariff with integer breakpoints.
fn declining_tariff() -> impl Strategy<Value = BlockRateTariff> {
    prop::collection::vec((1u64..500, 1u64..50), 1..6).prop_map(|steps| {
        let mut upper = 0;
        let mut marginal = 1000;
        let brackets = steps
            .into_iter()
            .map(|(width, drop)| {
                upper += width;
                marginal = (marginal - drop).max(1);
                Bracket { upper: gb(upper, 1), marginal: money(marginal, 10_000) }
            })
            .collect();
        BlockRateTariff::new(brackets, true).unwrap()
    })
}

fn bundle() -> impl Strategy<Value = BundlePlan> {
    (0u64..5, prop::collection::vec((1u64..100, 1u64..2000), 1..5)).prop_map(|(free, steps)| {
        let mut cap = free;
        let mut fee = 0;
        let tiers = steps
            .into_iter()
            .map(|(width, raise)| {
                cap += width;
                fee += raise;
                BundleTier { cap: gb(cap, 1), fee: money(fee, 100), period: BillingPeriod::Monthly }
            })
            .collect();
        BundlePlan::new(gb(free, 1), tiers).unwrap()
    })
}

#[test]
fn amazon_block_rate_is_continuous_at_every_breakpoint() {
    let amazon = amazon();
    let eps = rational(1, 1_000_000_000);
    for bracket in &amazon.brackets[..amazon.brackets.len() - 1] {
        let q = bracket.upper.gb();
        let at = tariff::block_rate_total_price(&amazon, &bracket.upper).unwrap();
        let right = tariff::block_rate_total_price(&amazon, &CapacityGB::new(q + &eps).unwrap()).unwrap();
        // right limit: remove the eps * marginal of the next bracket exactly
        let next = amazon.brackets.iter().find(|b| b.upper.gb() > q).unwrap();
        let right_limit = right.amount() - next.marginal.amount() * &eps;
        let left = tariff::block_rate_total_price(&amazon, &CapacityGB::new(q - &eps).unwrap()).unwrap();
        let left_limit = left.amount() + bracket.marginal.amount() * &eps;
        assert_eq!(&left_limit, at.amount());
        assert_eq!(&right_limit, at.amount());
    }
}

proptest! {
    #[test]
    fn block_rate_is_monotone_and_average_price_declines(tariff in declining_tariff(), a in 1u64..=1000, b in 1u64..=1000) {
        let max = tariff.max_capacity();
        let at = |k: u64| CapacityGB::new(max.gb() * rational(k, 1000)).unwrap();
        let (lo, hi) = (at(a.min(b)), at(a.max(b)));
        let p_lo = tariff::block_rate_total_price(&tariff, &lo).unwrap();
        let p_hi = tariff::block_rate_total_price(&tariff, &hi).unwrap();
        prop_assert!(p_lo.amount() <= p_hi.amount());
        prop_assert!(p_lo.amount() / lo.gb() >= p_hi.amount() / hi.gb());
    }

    #[test]
    fn bundle_is_a_sawtooth(plan in bundle(), tier_pick in 0usize..5, num in 1u64..1000) {
        let tier_pick = tier_pick % plan.tiers.len();
        let tier = &plan.tiers[tier_pick];
        let prev = if tier_pick == 0 { plan.free_gb.gb().clone() } else { plan.tiers[tier_pick - 1].cap.gb().clone() };
        // a point strictly inside (prev, cap)
        let inside = &prev + (tier.cap.gb() - &prev) * rational(num, 1000);
        let inside = CapacityGB::new(inside).unwrap();
        let price_in = tariff::bundle_total_price(&plan, &inside).unwrap();
        let price_cap = tariff::bundle_total_price(&plan, &tier.cap).unwrap();
        prop_assert_eq!(&price_in, &price_cap);
        prop_assert!(price_in.amount() / inside.gb() > price_cap.amount() / tier.cap.gb());
        let minima = tariff::local_minima(&plan).unwrap();
        prop_assert_eq!(&minima[tier_pick].x, &tier.cap);
        prop_assert_eq!(minima.len(), plan.tiers.len());
    }

    #[test]
    fn bundle_is_monotone(plan in bundle(), a in 0u64..=1000, b in 0u64..=1000) {
        let max = plan.max_capacity();
        let at = |k: u64| CapacityGB::new(max.gb() * rational(k, 1000)).unwrap();
        let (lo, hi) = (at(a.min(b)), at(a.max(b)));
        let p_lo = tariff::bundle_total_price(&plan, &lo).unwrap();
        let p_hi = tariff::bundle_total_price(&plan, &hi).unwrap();
        prop_assert!(p_lo.amount() <= p_hi.amount());
    }

    #[test]
    fn two_part_unit_price_gap_is_fee_over_capacity(f in 0u64..100_000, v in 0u64..10_000, x in 1u64..1_000_000) {
        let tariff = TwoPartTariff::new(money(f, 1000), money(v, 10_000)).unwrap();
        let x = gb(x, 10);
        let plan = wrap(PlanModel::TwoPart(tariff.clone()));
        let unit = tariff::unit_price(&plan, &x).unwrap();
        let gap = unit.amount() - tariff.marginal.amount();
        prop_assert_eq!(gap, tariff.fixed_fee.amount() / x.gb());
    }

    #[test]
    fn per_seat_floor_is_price_over_pooled_capacity(users in 5u32..100_000) {
        let teams = PerSeatPlan::new(5, money(795, 1), money(125, 1), gb(200, 1), Some(gb(1000, 1))).unwrap();
        let price = tariff::per_seat_price(&teams, users).unwrap();
        let floor = tariff::per_seat_unit_floor(&teams, users).unwrap();
        prop_assert_eq!(price.amount() / teams.capacity_for(users).gb(), floor.amount().clone());
        if users > 5 {
            let previous = tariff::per_seat_unit_floor(&teams, users - 1).unwrap();
            prop_assert!(floor.amount() < previous.amount());
        }
    }

    #[test]
    fn per_seat_total_is_monotone(a in 1u64..100_000, b in 1u64..100_000) {
        let teams = PerSeatPlan::new(5, money(795, 1), money(125, 1), gb(200, 1), None).unwrap();
        let plan = wrap(PlanModel::PerSeat(teams));
        let lo = tariff::total_price(&plan, &gb(a.min(b), 1)).unwrap();
        let hi = tariff::total_price(&plan, &gb(a.max(b), 1)).unwrap();
        prop_assert!(lo.amount() <= hi.amount());
    }

    #[test]
    fn currency_round_trip_is_exact(n in 0u64..u64::MAX, d in 1u64..1_000_000) {
        let m = Money::new(rational(n, d), Currency::Eur).unwrap();
        let back = m.convert(Currency::Usd).convert(Currency::Eur);
        prop_assert_eq!(&back, &m);
        let f = m.to_f64();
        prop_assert!((back.to_f64() - f).abs() <= 1e-12 * f.abs());
    }
}
