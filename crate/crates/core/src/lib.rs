//! Pricing digital goods from bids: a two-group auction priced by CDF
//! estimators (eCDF, KDE, and an exponential-family fit learned from past
//! rounds), turned into a single posted price.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod ingest;
pub mod kde;
pub mod mechanism;
pub mod online;
pub mod rde;
pub mod regret;
pub mod report;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
pub use experiment::{run_realbench, run_simulation, BenchConfig, BenchResult};
pub use grid::{
    argmax_revenue, cumulative_from_density, trapezoid_integral, DensityEstimate, GridFunction, PriceRange,
    SupportGrid, DEFAULT_PRICE_RANGE,
};
pub use ingest::{ingest_corpus, BidCorpus, CategorySummary, ExperimentSplit};
pub use kde::{ecdf_cdf, kde_estimate, Bandwidth, BandwidthRule, Kernel};
pub use mechanism::{auction_prices, random_split, run_round, BidSet, Cdf, Estimator, EstimatorId, RoundOutcome};
pub use online::{run_online, run_online_family, BidSchedule, OnlineConfig, OnlineRunResult};
pub use rde::{
    clr_transform, family_density, fit_theta_mle, fit_theta_mle_with, fpca, log_partition, ClrCurve,
    ExpFamilyModel, FpcaConfig, MleOptions, NaturalParams,
};
pub use regret::{
    average_cumulative_regret, instantaneous_regret, oracle_monopoly, virtual_valuation, Oracle, RegretRecord,
    ValueDistribution,
};
pub use simulate::{draw_bids, FamilyKind, FamilySampler};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
