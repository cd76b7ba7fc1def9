//! Online scheduler over `T` rounds.
//!
//! The first `t' = ceil(sqrt(T))` rounds are priced with KDE; each of them also
//! contributes a whole-round KDE (all bids, no split) to the training set. At
//! the stage boundary the training densities are clr-transformed, FPCA builds
//! the exponential family, and the model is frozen. The remaining rounds are
//! priced by RDE against that model.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityEstimate, PriceRange, SupportGrid, DEFAULT_PRICE_RANGE};
use crate::kde::{kde_estimate, Bandwidth, Kernel};
use crate::mechanism::{run_round, BidSet, Estimator, EstimatorId};
use crate::rde::{clr_transform, fpca, ExpFamilyModel, FpcaConfig, MleOptions, DEFAULT_FLOOR};
use crate::regret::{cumulative_trace, oracle_monopoly, RegretRecord, ValueDistribution, ORACLE_RESOLUTION};
use crate::seed::{staged_seed, substream, Stream};
use crate::simulate::{draw_bids, FamilySampler};

/// Bids received per round in each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BidSchedule {
    Fixed { exploration: usize, exploitation: usize },
    /// `max(10, ceil(c1 * T^(3/4) / ln(T)^2))` and `max(10, ceil(c2 * T^(1/2) / ln(T)^2))`.
    Scaled { c1: f64, c2: f64 },
}

impl BidSchedule {
    pub const SCALED_DEFAULT: BidSchedule = BidSchedule::Scaled { c1: 50.0, c2: 50.0 };
    pub const MIN_BIDS: usize = 10;

    /// `(exploration, exploitation)` bid counts for horizon `t`.
    pub fn counts(&self, horizon: usize) -> (usize, usize) {
        match *self {
            BidSchedule::Fixed { exploration, exploitation } => (exploration, exploitation),
            BidSchedule::Scaled { c1, c2 } => {
                let t = horizon as f64;
                let l2 = t.ln().powi(2);
                let m1 = (c1 * t.powf(0.75) / l2).ceil() as usize;
                let m2 = (c2 * t.sqrt() / l2).ceil() as usize;
                (m1.max(Self::MIN_BIDS), m2.max(Self::MIN_BIDS))
            }
        }
    }
}

impl Default for BidSchedule {
    fn default() -> Self {
        BidSchedule::Fixed { exploration: 200, exploitation: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    pub horizon: usize,
    /// Overrides `ceil(sqrt(T))` when set.
    pub exploration_rounds: Option<usize>,
    pub bids: BidSchedule,
    pub kernel: Kernel,
    /// Bandwidth of the split-group KDE that prices exploration rounds.
    pub exploration_bandwidth: Bandwidth,
    /// Bandwidth of the whole-round KDE feeding FPCA.
    pub training_bandwidth: Bandwidth,
    pub fpca: FpcaConfig,
    pub floor: f64,
    pub mle: MleOptions,
    pub grid: SupportGrid,
    pub price_range: PriceRange,
    pub oracle_resolution: usize,
    pub master_seed: u64,
    /// Experimental: refit the model after every exploitation round with that
    /// round's whole-round KDE. Forces sequential exploitation.
    pub refresh_model: bool,
}

impl OnlineConfig {
    pub fn new(horizon: usize, master_seed: u64) -> Self {
        Self {
            horizon,
            exploration_rounds: None,
            bids: BidSchedule::default(),
            kernel: Kernel::default(),
            exploration_bandwidth: Bandwidth::exploration(),
            training_bandwidth: Bandwidth::exploration(),
            fpca: FpcaConfig::default(),
            floor: DEFAULT_FLOOR,
            mle: MleOptions::default(),
            grid: SupportGrid::default(),
            price_range: DEFAULT_PRICE_RANGE,
            oracle_resolution: ORACLE_RESOLUTION,
            master_seed,
            refresh_model: false,
        }
    }

    /// Number of exploration rounds `t'`.
    pub fn t_prime(&self) -> usize {
        self.exploration_rounds.unwrap_or_else(|| (self.horizon as f64).sqrt().ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let tp = self.t_prime();
        if tp < 1 || tp >= self.horizon {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= t' < T, got t' = {tp}, T = {}",
                self.horizon
            )));
        }
        let (m1, m2) = self.bids.counts(self.horizon);
        if m1 < 2 || m2 < 2 {
            return Err(Error::InvalidParameter(format!("bid counts must be >= 2, got {m1}/{m2}")));
        }
        if !(self.floor > 0.0) {
            return Err(Error::InvalidParameter("floor must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a full online run.
#[derive(Debug, Clone)]
pub struct OnlineRunResult {
    pub records: Vec<RegretRecord>,
    /// Running mean of `records[..=i].regret`.
    pub cumulative: Vec<f64>,
    pub model: Arc<ExpFamilyModel>,
    pub exploration_rounds: usize,
    pub training_curves: usize,
    /// Rounds whose estimator failed, with the error message.
    pub skipped: Vec<(usize, String)>,
    pub round_seeds: Vec<u64>,
}

struct RoundResult {
    record: Result<RegretRecord>,
    training: Option<DensityEstimate>,
}

fn play_round(
    cfg: &OnlineConfig,
    t: usize,
    n_bids: usize,
    dist: &ValueDistribution,
    estimator: &Estimator,
    collect_training: bool,
) -> RoundResult {
    let seed = staged_seed(cfg.master_seed, t as u64);
    let bids = draw_bids(dist, n_bids, substream(seed, Stream::Bids));
    let training = if collect_training {
        let w = cfg.training_bandwidth.resolve(&bids, &cfg.grid);
        kde_estimate(&bids, cfg.kernel, w, &cfg.grid).ok()
    } else {
        None
    };
    let record = BidSet::split(bids, substream(seed, Stream::Split))
        .and_then(|set| run_round(&set, estimator, &cfg.grid, cfg.price_range, None))
        .map(|out| {
            let oracle = oracle_monopoly(dist, cfg.price_range, cfg.oracle_resolution);
            RegretRecord::new(t, estimator.id(), n_bids, dist, out.posted_price, oracle)
        });
    RoundResult { record, training }
}

/// Runs every round; `sampler(t, seed)` yields round `t`'s true distribution.
pub fn run_online<S>(cfg: &OnlineConfig, sampler: S) -> Result<OnlineRunResult>
where
    S: Fn(usize, u64) -> Result<ValueDistribution> + Sync,
{
    cfg.validate()?;
    let tp = cfg.t_prime();
    let (m1, m2) = cfg.bids.counts(cfg.horizon);
    let round_seeds: Vec<u64> = (1..=cfg.horizon).map(|t| staged_seed(cfg.master_seed, t as u64)).collect();
    let dists: Vec<ValueDistribution> = (1..=cfg.horizon)
        .into_par_iter()
        .map(|t| sampler(t, substream(round_seeds[t - 1], Stream::Distribution)))
        .collect::<Result<_>>()?;

    let kde = Estimator::Kde { kernel: cfg.kernel, bandwidth: cfg.exploration_bandwidth };
    let exploration: Vec<RoundResult> =
        (1..=tp).into_par_iter().map(|t| play_round(cfg, t, m1, &dists[t - 1], &kde, true)).collect();

    let mut curves = Vec::with_capacity(tp);
    for r in &exploration {
        let dens = r.training.as_ref().ok_or_else(|| Error::Fpca("training density missing".into()))?;
        curves.push(clr_transform(dens, cfg.floor)?);
    }
    let training_curves = curves.len();
    let mut model = Arc::new(fpca(&curves, cfg.fpca).map_err(|e| Error::Fpca(e.to_string()))?);
    let frozen = Arc::clone(&model);

    let exploitation: Vec<RoundResult> = if cfg.refresh_model {
        let mut out = Vec::with_capacity(cfg.horizon - tp);
        for t in tp + 1..=cfg.horizon {
            let est = Estimator::Rde { model: Arc::clone(&model), mle: cfg.mle };
            let r = play_round(cfg, t, m2, &dists[t - 1], &est, true);
            if let Some(d) = &r.training {
                curves.push(clr_transform(d, cfg.floor)?);
                model = Arc::new(fpca(&curves, cfg.fpca).map_err(|e| Error::Fpca(e.to_string()))?);
            }
            out.push(r);
        }
        out
    } else {
        let est = Estimator::Rde { model: Arc::clone(&frozen), mle: cfg.mle };
        (tp + 1..=cfg.horizon).into_par_iter().map(|t| play_round(cfg, t, m2, &dists[t - 1], &est, false)).collect()
    };

    let mut records = Vec::with_capacity(cfg.horizon);
    let mut skipped = Vec::new();
    for (i, r) in exploration.into_iter().chain(exploitation).enumerate() {
        match r.record {
            Ok(rec) => records.push(rec),
            Err(e) => skipped.push((i + 1, e.to_string())),
        }
    }
    let cumulative = cumulative_trace(records.iter().map(|r| r.regret));
    Ok(OnlineRunResult {
        records,
        cumulative,
        model: frozen,
        exploration_rounds: tp,
        training_curves,
        skipped,
        round_seeds,
    })
}

/// [`run_online`] with round distributions drawn from a family.
pub fn run_online_family(cfg: &OnlineConfig, family: &FamilySampler) -> Result<OnlineRunResult> {
    run_online(cfg, |_, seed| family.sample_seeded(seed))
}

impl OnlineRunResult {
    /// Mean regret over the records of one estimator.
    pub fn stage_mean(&self, id: EstimatorId) -> Option<f64> {
        let r: Vec<f64> = self.records.iter().filter(|r| r.estimator == id).map(|r| r.regret).collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }
}
