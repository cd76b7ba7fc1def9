use std::path::PathBuf;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand};
use mapp_core::{EstimatorId, FamilyKind};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MAPP_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mapp", version, about = "Auction-to-posted-price simulator and regret benchmarks")]
pub struct Cli {
    /// Worker threads for round-level parallelism (default: available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: Option<u16>,

    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "mapp-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regret of each estimator on a synthetic family over independent rounds.
    Simulate(SimulateArgs),
    /// Explore-then-exploit run over a horizon of T rounds.
    Online(OnlineArgs),
    /// Validate a `category,bid` CSV and write its log-bid summary.
    Ingest(IngestArgs),
    /// Hold out one category of a bid corpus and benchmark on it.
    Realbench(RealbenchArgs),
    /// Quick randomized checks of the mechanism and estimators.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct RoundsArgs {
    /// Bids per round; comma separated for several sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 50, 200],
          value_parser = clap::value_parser!(u64).range(2..).map(|v| v as usize))]
    pub n_bids: Vec<usize>,

    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub rounds: usize,

    #[arg(long, value_delimiter = ',', default_values_t = EstimatorId::ALL)]
    pub estimators: Vec<EstimatorId>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Regret histogram bins.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub bins: usize,

    /// RDE training rounds.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub training_rounds: usize,

    /// Bids per RDE training round.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..).map(|v| v as usize))]
    pub training_bids: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub family: FamilyKind,

    #[command(flatten)]
    pub rounds: RoundsArgs,
}

#[derive(Debug, Args)]
pub struct OnlineArgs {
    /// Horizon.
    #[arg(long = "T", value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub horizon: usize,

    #[arg(long)]
    pub family: FamilyKind,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..).map(|v| v as usize))]
    pub exploration_bids: usize,

    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..).map(|v| v as usize))]
    pub exploitation_bids: usize,

    /// Grow bid counts with T instead of using the fixed counts.
    #[arg(long = "theorem3-scaling", conflicts_with_all = ["exploration_bids", "exploitation_bids"])]
    pub scaled: bool,

    /// Experimental: refit the model after every exploitation round.
    #[arg(long)]
    pub refresh_model: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV with `category` and `bid` columns.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct RealbenchArgs {
    /// CSV with `category` and `bid` columns.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = "G")]
    pub test_category: String,

    #[command(flatten)]
    pub rounds: RoundsArgs,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Random instances per property.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
