//! Randomized spot checks of the mechanism, oracle and estimators.

use std::sync::Arc;

use mapp_core::grid::{SupportGrid, DEFAULT_HI, DEFAULT_LO, DEFAULT_PRICE_RANGE};
use mapp_core::rde::{family_density, sufficient_statistics};
use mapp_core::seed::{mix64, staged_seed, substream, Stream};
use mapp_core::{
    auction_prices, draw_bids, fit_theta_mle, oracle_monopoly, run_round, run_simulation, BenchConfig, BidSet,
    Estimator, ExpFamilyModel, FamilyKind, FamilySampler, ValueDistribution,
};

use crate::args::SelftestArgs;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, failures: Vec<String>, total: usize) -> Self {
        let detail = match failures.first() {
            None => format!("{total} cases"),
            Some(first) => format!("{} of {total} cases failed; first: {first}", failures.len()),
        };
        Self { name, passed: failures.is_empty(), detail }
    }
}

fn small_grid() -> SupportGrid {
    SupportGrid::new(DEFAULT_LO, DEFAULT_HI, 1024).expect("valid grid")
}

fn trained_model(seed: u64) -> mapp_core::Result<Arc<ExpFamilyModel>> {
    let cfg = BenchConfig { grid: small_grid(), training_rounds: 20, seed, ..Default::default() };
    let sets = mapp_core::experiment::simulated_training_sets(&cfg, &FamilySampler::new(FamilyKind::Gaussian))?;
    Ok(Arc::new(cfg.train_model(&sets)?))
}

/// Random round `i`: a family member, a bid count in `[2, 200]`, a split,
/// a bidder and an alternative bid.
fn instance(seed: u64, i: usize) -> mapp_core::Result<(BidSet, usize, f64)> {
    let s = staged_seed(seed, i as u64 + 1);
    let kind = FamilyKind::ALL[(mix64(s) % 3) as usize];
    let dist = FamilySampler::new(kind).sample_seeded(substream(s, Stream::Distribution))?;
    let n = 2 + (mix64(s ^ 1) % 199) as usize;
    let set = BidSet::split(draw_bids(&dist, n, substream(s, Stream::Bids)), substream(s, Stream::Split))?;
    let who = (mix64(s ^ 2) % n as u64) as usize;
    let alt = draw_bids(&ValueDistribution::uniform(1.0, 10.0)?, 1, substream(s, Stream::Perturbation))[0];
    Ok((set, who, alt))
}

fn mechanism_checks(args: &SelftestArgs, estimators: &[Estimator]) -> Vec<Check> {
    let grid = small_grid();
    let mut ic = Vec::new();
    let mut ir = Vec::new();
    for i in 0..args.trials {
        let (set, who, alt) = match instance(args.seed, i) {
            Ok(x) => x,
            Err(e) => {
                ic.push(format!("instance {i}: {e}"));
                continue;
            }
        };
        for est in estimators {
            let before = auction_prices(&set, est, &grid, DEFAULT_PRICE_RANGE);
            let after = auction_prices(&set.with_bid(who, alt), est, &grid, DEFAULT_PRICE_RANGE);
            match (before, after) {
                (Ok(a), Ok(b)) if a.per_bidder[who].to_bits() == b.per_bidder[who].to_bits() => {}
                (Ok(a), Ok(b)) => ic.push(format!("{} instance {i}: {} -> {}", est.id(), a.per_bidder[who], b.per_bidder[who])),
                (Err(e), _) | (_, Err(e)) => ic.push(format!("{} instance {i}: {e}", est.id())),
            }
            match run_round(&set, est, &grid, DEFAULT_PRICE_RANGE, None) {
                Ok(out) => {
                    let mut distinct = out.auction_prices.clone();
                    distinct.sort_by(f64::total_cmp);
                    distinct.dedup();
                    let max = distinct.last().copied().unwrap_or(f64::NAN);
                    if distinct.len() > 2 || out.posted_price != max {
                        ir.push(format!("{} instance {i}: prices {distinct:?}, posted {}", est.id(), out.posted_price));
                    }
                }
                Err(e) => ir.push(format!("{} instance {i}: {e}", est.id())),
            }
        }
    }
    let total = args.trials * estimators.len();
    vec![
        Check::new("own bid does not move own price", ic, total),
        Check::new("posted price is the max of at most two prices", ir, total),
    ]
}

fn oracle_check() -> Check {
    let mut failures = Vec::new();
    match ValueDistribution::uniform(1.0, 10.0) {
        Ok(u) => {
            let o = oracle_monopoly(&u, DEFAULT_PRICE_RANGE, mapp_core::regret::ORACLE_RESOLUTION);
            let spacing = 9.0 / (mapp_core::regret::ORACLE_RESOLUTION - 1) as f64;
            if (o.price - 5.0).abs() > spacing || (o.value - 25.0 / 9.0).abs() > 1e-3 {
                failures.push(format!("price {} value {}", o.price, o.value));
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    Check::new("uniform monopoly price", failures, 1)
}

fn mle_check(args: &SelftestArgs, model: &ExpFamilyModel) -> Check {
    let mut failures = Vec::new();
    let cases = 10;
    for i in 0..cases {
        let s = staged_seed(args.seed ^ 0x4d4c45, i + 1);
        let result = FamilySampler::new(FamilyKind::Gaussian).sample_seeded(s).and_then(|dist| {
            let bids = draw_bids(&dist, 50, substream(s, Stream::Bids));
            let theta = fit_theta_mle(&bids, model)?;
            let stats = sufficient_statistics(&bids, model)?;
            let density = family_density(model, &theta)?;
            let gap = model
                .eigencurves()
                .iter()
                .zip(&stats)
                .map(|(phi, s)| (phi.inner(density.function()) - s).abs())
                .fold(0.0, f64::max);
            Ok(gap)
        });
        match result {
            Ok(gap) if gap < 1e-6 => {}
            Ok(gap) => failures.push(format!("case {i}: moment gap {gap:e}")),
            Err(e) => failures.push(format!("case {i}: {e}")),
        }
    }
    Check::new("fitted moments match sample moments", failures, cases as usize)
}

fn determinism_check(args: &SelftestArgs) -> Check {
    let cfg = BenchConfig { rounds: 8, grid: small_grid(), training_rounds: 10, seed: args.seed, oracle_resolution: 2000, ..Default::default() };
    let run = || run_simulation(&cfg, FamilyKind::Exponential, &[10, 40]).map(|r| r.records);
    let failures = match (run(), run()) {
        (Ok(a), Ok(b)) if a == b => Vec::new(),
        (Ok(_), Ok(_)) => vec!["records differ".to_string()],
        (Err(e), _) | (_, Err(e)) => vec![e.to_string()],
    };
    Check::new("repeat run is identical", failures, 1)
}

pub fn run_checks(args: &SelftestArgs) -> Vec<Check> {
    let model = match trained_model(args.seed) {
        Ok(m) => m,
        Err(e) => return vec![Check::new("train model", vec![e.to_string()], 1)],
    };
    let estimators = [Estimator::Ecdf, Estimator::kde_default(), Estimator::rde(Arc::clone(&model))];
    let mut checks = mechanism_checks(args, &estimators);
    checks.push(oracle_check());
    checks.push(mle_check(args, &model));
    checks.push(determinism_check(args));
    checks
}
