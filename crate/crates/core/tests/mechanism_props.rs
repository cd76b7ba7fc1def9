use std::sync::{Arc, OnceLock};

use mapp_core::experiment::{simulated_training_sets, BenchConfig};
use mapp_core::grid::{SupportGrid, DEFAULT_HI, DEFAULT_LO, DEFAULT_PRICE_RANGE};
use mapp_core::mechanism::{auction_prices, run_round, BidSet, Estimator};
use mapp_core::rde::ExpFamilyModel;
use mapp_core::regret::{oracle_monopoly, ValueDistribution};
use mapp_core::simulate::{draw_bids, FamilyKind, FamilySampler};
use proptest::prelude::*;

fn grid() -> SupportGrid {
    SupportGrid::new(DEFAULT_LO, DEFAULT_HI, 1024).unwrap()
}

fn model() -> Arc<ExpFamilyModel> {
    static MODEL: OnceLock<Arc<ExpFamilyModel>> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            let cfg = BenchConfig { grid: grid(), training_rounds: 20, ..Default::default() };
            let sets = simulated_training_sets(&cfg, &FamilySampler::new(FamilyKind::Gaussian)).unwrap();
            Arc::new(cfg.train_model(&sets).unwrap())
        })
        .clone()
}

fn estimator(k: usize) -> Estimator {
    match k {
        0 => Estimator::Ecdf,
        1 => Estimator::kde_default(),
        _ => Estimator::rde(model()),
    }
}

#[test]
fn kde_group_prices_near_monopoly_price() {
    // A single draw lands within 0.5 about three times in four; check the frequency.
    let dist = ValueDistribution::trunc_gaussian(5.0, 2.0, DEFAULT_LO, DEFAULT_HI).unwrap();
    let oracle = oracle_monopoly(&dist, DEFAULT_PRICE_RANGE, 100_000);
    let grid = SupportGrid::default();
    let mut errors: Vec<f64> = (0..100u64)
        .map(|seed| {
            let set = BidSet::split(draw_bids(&dist, 200, seed), seed + 1000).unwrap();
            let prices = auction_prices(&set, &Estimator::kde_default(), &grid, DEFAULT_PRICE_RANGE).unwrap();
            prices.group_prices.iter().map(|p| (p - oracle.price).abs()).fold(0.0, f64::max)
        })
        .collect();
    let within = errors.iter().filter(|&&e| e < 0.5).count();
    errors.sort_by(f64::total_cmp);
    assert!(within >= 60, "{within}/100 within 0.5");
    assert!(errors[50] < 0.5, "median error {}", errors[50]);
}

#[test]
fn run_round_is_deterministic() {
    let dist = ValueDistribution::trunc_exponential(0.3, DEFAULT_LO, DEFAULT_HI).unwrap();
    let bids = draw_bids(&dist, 31, 2);
    for k in 0..3 {
        let est = estimator(k);
        let a = run_round(&BidSet::split(bids.clone(), 5).unwrap(), &est, &grid(), DEFAULT_PRICE_RANGE, Some(&dist)).unwrap();
        let b = run_round(&BidSet::split(bids.clone(), 5).unwrap(), &est, &grid(), DEFAULT_PRICE_RANGE, Some(&dist)).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn own_bid_never_moves_own_price(
        bids in prop::collection::vec(1.0f64..10.0, 2..120),
        split_seed in any::<u64>(),
        who in any::<prop::sample::Index>(),
        new_bid in 1.0f64..10.0,
        k in 0usize..3,
    ) {
        let set = BidSet::split(bids, split_seed).unwrap();
        let i = who.index(set.len());
        let est = estimator(k);
        let before = auction_prices(&set, &est, &grid(), DEFAULT_PRICE_RANGE).unwrap();
        let after = auction_prices(&set.with_bid(i, new_bid), &est, &grid(), DEFAULT_PRICE_RANGE).unwrap();
        prop_assert_eq!(before.per_bidder[i].to_bits(), after.per_bidder[i].to_bits());
    }

    #[test]
    fn posted_price_dominates_and_two_prices_at_most(
        bids in prop::collection::vec(1.0f64..10.0, 2..120),
        split_seed in any::<u64>(),
        k in 0usize..3,
    ) {
        let set = BidSet::split(bids, split_seed).unwrap();
        let out = run_round(&set, &estimator(k), &grid(), DEFAULT_PRICE_RANGE, None).unwrap();
        let max = out.auction_prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(out.posted_price, max);
        prop_assert!(out.auction_prices.iter().all(|&p| out.posted_price >= p));
        let mut distinct = out.auction_prices.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        prop_assert!(distinct.len() <= 2);
        for ((b, p), x) in set.bids().iter().zip(&out.auction_prices).zip(&out.auction_allocations) {
            prop_assert_eq!(*x, b >= p);
        }
        let revenue: f64 = out.auction_prices.iter().zip(&out.auction_allocations).filter(|(_, &x)| x).map(|(p, _)| p).sum();
        prop_assert_eq!(out.auction_revenue, revenue);
    }
}
