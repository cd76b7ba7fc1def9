//! Offline benchmarks: many independent rounds per estimator, all estimators
//! seeing the same bids and the same split in each round.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PriceRange, SupportGrid, DEFAULT_PRICE_RANGE};
use crate::ingest::{resample, ExperimentSplit};
use crate::kde::{kde_estimate, Bandwidth, Kernel};
use crate::mechanism::{run_round, BidSet, Estimator, EstimatorId};
use crate::rde::{clr_transform, fpca, ExpFamilyModel, FpcaConfig, MleOptions, DEFAULT_FLOOR};
use crate::regret::{oracle_monopoly, Oracle, RegretRecord, ValueDistribution, ORACLE_RESOLUTION};
use crate::seed::{mix64, staged_seed, substream, Stream};
use crate::simulate::{draw_bids, FamilyKind, FamilySampler};

/// Shared settings for simulate and realbench runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub rounds: usize,
    pub estimators: Vec<EstimatorId>,
    pub seed: u64,
    pub training_rounds: usize,
    pub training_bids: usize,
    pub kernel: Kernel,
    /// Bandwidth of the split-group KDE estimator.
    pub bandwidth: Bandwidth,
    /// Bandwidth of the whole-round training KDE.
    pub training_bandwidth: Bandwidth,
    pub fpca: FpcaConfig,
    pub floor: f64,
    pub mle: MleOptions,
    pub grid: SupportGrid,
    pub price_range: PriceRange,
    pub oracle_resolution: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            rounds: 1000,
            estimators: EstimatorId::ALL.to_vec(),
            seed: 0,
            training_rounds: 50,
            training_bids: 200,
            kernel: Kernel::default(),
            bandwidth: Bandwidth::exploration(),
            training_bandwidth: Bandwidth::exploration(),
            fpca: FpcaConfig::default(),
            floor: DEFAULT_FLOOR,
            mle: MleOptions::default(),
            grid: SupportGrid::default(),
            price_range: DEFAULT_PRICE_RANGE,
            oracle_resolution: ORACLE_RESOLUTION,
        }
    }
}

impl BenchConfig {
    fn validate(&self, n_values: &[usize]) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be positive".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators selected".into()));
        }
        if let Some(&n) = n_values.iter().find(|&&n| n < 2) {
            return Err(Error::TooFew { needed: 2, got: n });
        }
        if self.estimators.contains(&EstimatorId::Rde) && (self.training_rounds == 0 || self.training_bids < 2) {
            return Err(Error::InvalidParameter("RDE needs training rounds with at least 2 bids".into()));
        }
        Ok(())
    }

    fn estimator(&self, id: EstimatorId, model: Option<&Arc<ExpFamilyModel>>) -> Estimator {
        match id {
            EstimatorId::Ecdf => Estimator::Ecdf,
            EstimatorId::Kde => Estimator::Kde { kernel: self.kernel, bandwidth: self.bandwidth },
            EstimatorId::Rde => Estimator::Rde {
                model: Arc::clone(model.expect("model is trained when RDE is selected")),
                mle: self.mle,
            },
        }
    }

    /// Builds the exponential family from whole-round KDEs of training bid sets.
    pub fn train_model(&self, bid_sets: &[Vec<f64>]) -> Result<ExpFamilyModel> {
        let curves = bid_sets
            .par_iter()
            .map(|bids| {
                let w = self.training_bandwidth.resolve(bids, &self.grid);
                clr_transform(&kde_estimate(bids, self.kernel, w, &self.grid)?, self.floor)
            })
            .collect::<Result<Vec<_>>>()?;
        fpca(&curves, self.fpca)
    }
}

/// Regret records keyed by `(estimator, n_bids)`, in round order.
#[derive(Debug, Clone, Default)]
pub struct BenchResult {
    pub records: BTreeMap<(EstimatorId, usize), Vec<RegretRecord>>,
    /// Rounds whose estimator failed.
    pub skipped: BTreeMap<(EstimatorId, usize), Vec<(usize, String)>>,
    pub model: Option<Arc<ExpFamilyModel>>,
}

impl BenchResult {
    pub fn regrets(&self, id: EstimatorId, n: usize) -> Vec<f64> {
        self.records.get(&(id, n)).map(|r| r.iter().map(|x| x.regret).collect()).unwrap_or_default()
    }

    /// Regrets of two estimators on the rounds both completed.
    pub fn paired(&self, a: EstimatorId, b: EstimatorId, n: usize) -> Vec<(f64, f64)> {
        let (Some(ra), Some(rb)) = (self.records.get(&(a, n)), self.records.get(&(b, n))) else {
            return Vec::new();
        };
        let by_round: BTreeMap<usize, f64> = rb.iter().map(|r| (r.round, r.regret)).collect();
        ra.iter().filter_map(|r| by_round.get(&r.round).map(|&y| (r.regret, y))).collect()
    }

    pub fn all_records(&self) -> impl Iterator<Item = &RegretRecord> {
        self.records.values().flatten()
    }
}

type RoundRows = Vec<((EstimatorId, usize), usize, Result<RegretRecord>)>;

fn play_all(
    cfg: &BenchConfig,
    round: usize,
    dist: &ValueDistribution,
    oracle: Oracle,
    n_values: &[usize],
    estimators: &[Estimator],
    bids_for: impl Fn(usize) -> Result<Vec<f64>>,
    split_seed: u64,
) -> RoundRows {
    let mut rows = Vec::new();
    for &n in n_values {
        let set = bids_for(n).and_then(|b| BidSet::split(b, split_seed));
        for est in estimators {
            let rec = set.as_ref().map_err(|e| Error::InvalidParameter(e.to_string())).and_then(|set| {
                run_round(set, est, &cfg.grid, cfg.price_range, None)
                    .map(|o| RegretRecord::new(round, est.id(), n, dist, o.posted_price, oracle))
            });
            rows.push(((est.id(), n), round, rec));
        }
    }
    rows
}

fn collect(rows: Vec<RoundRows>, model: Option<Arc<ExpFamilyModel>>) -> BenchResult {
    let mut out = BenchResult { model, ..Default::default() };
    for (key, round, rec) in rows.into_iter().flatten() {
        match rec {
            Ok(r) => out.records.entry(key).or_default().push(r),
            Err(e) => out.skipped.entry(key).or_default().push((round, e.to_string())),
        }
    }
    out
}

/// Training bid sets for a simulated family, on their own seed stream.
pub fn simulated_training_sets(cfg: &BenchConfig, sampler: &FamilySampler) -> Result<Vec<Vec<f64>>> {
    let master = substream(cfg.seed, Stream::Training);
    (1..=cfg.training_rounds)
        .into_par_iter()
        .map(|j| {
            let s = staged_seed(master, j as u64);
            let dist = sampler.sample_seeded(substream(s, Stream::Distribution))?;
            Ok(draw_bids(&dist, cfg.training_bids, substream(s, Stream::Bids)))
        })
        .collect()
}

/// Simulated benchmark over several bid counts at once.
///
/// Round `r`'s true distribution depends only on `(seed, r)`, so every bid
/// count and estimator shares one oracle per round; bid draws for smaller `n`
/// are prefixes of those for larger `n`.
pub fn run_simulation(cfg: &BenchConfig, family: FamilyKind, n_values: &[usize]) -> Result<BenchResult> {
    cfg.validate(n_values)?;
    let sampler = FamilySampler::new(family);
    let model = if cfg.estimators.contains(&EstimatorId::Rde) {
        Some(Arc::new(cfg.train_model(&simulated_training_sets(cfg, &sampler)?)?))
    } else {
        None
    };
    let estimators: Vec<Estimator> = cfg.estimators.iter().map(|&id| cfg.estimator(id, model.as_ref())).collect();
    let rows = (1..=cfg.rounds)
        .into_par_iter()
        .map(|r| {
            let s = staged_seed(cfg.seed, r as u64);
            let dist = match sampler.sample_seeded(substream(s, Stream::Distribution)) {
                Ok(d) => d,
                Err(e) => {
                    let msg = e.to_string();
                    return estimators
                        .iter()
                        .flat_map(|est| n_values.iter().map(move |&n| (est.id(), n)))
                        .map(|key| (key, r, Err(Error::InvalidParameter(msg.clone()))))
                        .collect();
                }
            };
            let oracle = oracle_monopoly(&dist, cfg.price_range, cfg.oracle_resolution);
            let bid_seed = substream(s, Stream::Bids);
            play_all(cfg, r, &dist, oracle, n_values, &estimators, |n| Ok(draw_bids(&dist, n, bid_seed)), substream(s, Stream::Split))
        })
        .collect();
    Ok(collect(rows, model))
}

/// Real-data benchmark: training rounds cycle through the training categories,
/// test rounds resample the held-out category, whose empirical CDF is the truth.
pub fn run_realbench(cfg: &BenchConfig, split: &ExperimentSplit, n_values: &[usize]) -> Result<BenchResult> {
    cfg.validate(n_values)?;
    if split.train.is_empty() {
        return Err(Error::DegenerateCorpus("no training categories".into()));
    }
    let (lo, hi) = (cfg.grid.lo(), cfg.grid.hi());
    let truth = ValueDistribution::empirical(&split.test, lo, hi)?;
    let oracle = oracle_monopoly(&truth, cfg.price_range, cfg.oracle_resolution);

    let model = if cfg.estimators.contains(&EstimatorId::Rde) {
        let pools: Vec<&Vec<f64>> = split.train.values().collect();
        let master = substream(cfg.seed, Stream::Training);
        let sets = (0..cfg.training_rounds)
            .map(|j| resample(pools[j % pools.len()], cfg.training_bids, staged_seed(master, j as u64 + 1)))
            .collect::<Result<Vec<_>>>()?;
        Some(Arc::new(cfg.train_model(&sets)?))
    } else {
        None
    };
    let estimators: Vec<Estimator> = cfg.estimators.iter().map(|&id| cfg.estimator(id, model.as_ref())).collect();
    let rows = (1..=cfg.rounds)
        .into_par_iter()
        .map(|r| {
            let s = staged_seed(cfg.seed, r as u64);
            let bid_seed = substream(s, Stream::Bids);
            play_all(cfg, r, &truth, oracle, n_values, &estimators, |n| resample(&split.test, n, bid_seed), substream(s, Stream::Split))
        })
        .collect();
    Ok(collect(rows, model))
}

/// Equal-width regret histogram shared across estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub estimator: EstimatorId,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

pub fn regret_histogram(result: &BenchResult, bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let max = result.all_records().map(|r| r.regret).fold(0.0, f64::max);
    let width = if max > 0.0 { max / bins as f64 } else { 1.0 };
    let mut out = Vec::new();
    let mut by_est: BTreeMap<EstimatorId, Vec<usize>> = BTreeMap::new();
    for r in result.all_records() {
        let b = ((r.regret / width) as usize).min(bins - 1);
        by_est.entry(r.estimator).or_insert_with(|| vec![0; bins])[b] += 1;
    }
    for (est, counts) in by_est {
        for (i, c) in counts.into_iter().enumerate() {
            out.push(HistogramBin { estimator: est, bin_lo: i as f64 * width, bin_hi: (i + 1) as f64 * width, count: c });
        }
    }
    out
}

/// Seed of batch `b` derived from a master seed.
pub fn batch_seed(master: u64, batch: u64) -> u64 {
    mix64(master ^ mix64(batch.wrapping_add(0x5eed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchConfig {
        BenchConfig {
            rounds: 12,
            training_rounds: 10,
            training_bids: 100,
            grid: SupportGrid::new(0.9, 10.1, 1024).unwrap(),
            oracle_resolution: 2_000,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn paired_rounds_and_determinism() {
        let cfg = quick();
        let a = run_simulation(&cfg, FamilyKind::Gaussian, &[10, 20]).unwrap();
        let b = run_simulation(&cfg, FamilyKind::Gaussian, &[10, 20]).unwrap();
        assert_eq!(a.records, b.records);
        for id in EstimatorId::ALL {
            for n in [10, 20] {
                let recs = &a.records[&(id, n)];
                assert!(recs.len() + a.skipped.get(&(id, n)).map_or(0, Vec::len) == 12);
                assert!(recs.iter().all(|r| r.regret >= 0.0 && r.n_bids == n && r.estimator == id));
            }
        }
        // oracle is shared across n
        let o10: Vec<_> = a.records[&(EstimatorId::Ecdf, 10)].iter().map(|r| r.opt_price).collect();
        let o20: Vec<_> = a.records[&(EstimatorId::Ecdf, 20)].iter().map(|r| r.opt_price).collect();
        assert_eq!(o10, o20);
    }

    #[test]
    fn single_n_matches_multi_n() {
        let cfg = BenchConfig { estimators: vec![EstimatorId::Kde], ..quick() };
        let a = run_simulation(&cfg, FamilyKind::Exponential, &[10, 50]).unwrap();
        let b = run_simulation(&cfg, FamilyKind::Exponential, &[50]).unwrap();
        assert_eq!(a.records[&(EstimatorId::Kde, 50)], b.records[&(EstimatorId::Kde, 50)]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(run_simulation(&quick(), FamilyKind::Beta, &[1]).is_err());
        let cfg = BenchConfig { estimators: vec![], ..quick() };
        assert!(run_simulation(&cfg, FamilyKind::Beta, &[10]).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let cfg = BenchConfig { estimators: vec![EstimatorId::Ecdf, EstimatorId::Kde], ..quick() };
        let res = run_simulation(&cfg, FamilyKind::Gaussian, &[10]).unwrap();
        let h = regret_histogram(&res, 7);
        assert_eq!(h.len(), 14);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), res.all_records().count());
    }

    #[test]
    fn realbench_on_small_corpus() {
        let mut train = BTreeMap::new();
        train.insert("a".to_string(), (0..80).map(|i| 2.0 + 0.05 * i as f64).collect::<Vec<_>>());
        train.insert("b".to_string(), (0..80).map(|i| 4.0 + 0.06 * i as f64).collect::<Vec<_>>());
        let split = ExperimentSplit {
            test_category: "t".into(),
            train,
            test: (0..120).map(|i| 3.0 + 0.04 * i as f64).collect(),
        };
        let res = run_realbench(&quick(), &split, &[20]).unwrap();
        for id in EstimatorId::ALL {
            let done = res.records.get(&(id, 20)).map_or(0, Vec::len);
            assert_eq!(done + res.skipped.get(&(id, 20)).map_or(0, Vec::len), 12);
        }
        let opt: Vec<f64> = res.all_records().map(|r| r.opt_price).collect();
        assert!(opt.windows(2).all(|w| w[0] == w[1]));
    }
}
