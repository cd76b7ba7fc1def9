//! One round of the auction-to-posted-price mechanism.
//!
//! Bidders are split into two balanced groups. Every bidder is quoted the
//! revenue-maximizing price of a CDF estimated from the *other* group only, so
//! a bidder's own bid never influences their price. Bidders at or above their
//! price receive a copy; later buyers see the larger of the two group prices.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{argmax_revenue, cumulative_from_density, GridFunction, PriceRange, SupportGrid};
use crate::kde::{ecdf_cdf, kde_estimate, Bandwidth, Kernel};
use crate::rde::{family_density, fit_theta_mle_with, ExpFamilyModel, MleOptions};
use crate::regret::ValueDistribution;

/// Which density estimator priced a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorId {
    Ecdf,
    Kde,
    Rde,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 3] = [EstimatorId::Ecdf, EstimatorId::Kde, EstimatorId::Rde];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::Ecdf => "ecdf",
            EstimatorId::Kde => "kde",
            EstimatorId::Rde => "rde",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecdf" => Ok(EstimatorId::Ecdf),
            "kde" => Ok(EstimatorId::Kde),
            "rde" => Ok(EstimatorId::Rde),
            other => Err(Error::InvalidParameter(format!("unknown estimator {other:?}"))),
        }
    }
}

/// CDF estimator used to price one group from the other group's bids.
#[derive(Debug, Clone)]
pub enum Estimator {
    Ecdf,
    Kde { kernel: Kernel, bandwidth: Bandwidth },
    Rde { model: Arc<ExpFamilyModel>, mle: MleOptions },
}

impl Estimator {
    pub fn kde_default() -> Self {
        Estimator::Kde { kernel: Kernel::default(), bandwidth: Bandwidth::exploration() }
    }

    pub fn rde(model: Arc<ExpFamilyModel>) -> Self {
        Estimator::Rde { model, mle: MleOptions::default() }
    }

    pub fn id(&self) -> EstimatorId {
        match self {
            Estimator::Ecdf => EstimatorId::Ecdf,
            Estimator::Kde { .. } => EstimatorId::Kde,
            Estimator::Rde { .. } => EstimatorId::Rde,
        }
    }

    /// Estimated CDF on `grid` (the RDE model carries its own grid).
    pub fn estimate_cdf(&self, samples: &[f64], grid: &SupportGrid) -> Result<GridFunction> {
        match self {
            Estimator::Ecdf => ecdf_cdf(samples, grid),
            Estimator::Kde { kernel, bandwidth } => {
                let w = bandwidth.resolve(samples, grid);
                Ok(cumulative_from_density(&kde_estimate(samples, *kernel, w, grid)?))
            }
            Estimator::Rde { model, mle } => {
                let theta = fit_theta_mle_with(samples, model, *mle)?;
                Ok(cumulative_from_density(&family_density(model, &theta)?))
            }
        }
    }

    /// Revenue-maximizing grid price for the estimated CDF.
    pub fn price(&self, samples: &[f64], grid: &SupportGrid, range: PriceRange) -> Result<f64> {
        Ok(argmax_revenue(&self.estimate_cdf(samples, grid)?, range)?.0)
    }
}

/// Seeded balanced split: shuffle indices, the first `ceil(n/2)` go to group 0.
pub fn random_split(n: usize, seed: u64) -> Result<Vec<u8>> {
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups = vec![1u8; n];
    for &i in &idx[..n.div_ceil(2)] {
        groups[i] = 0;
    }
    Ok(groups)
}

/// Bids with their group labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidSet {
    bids: Vec<f64>,
    groups: Vec<u8>,
}

impl BidSet {
    pub fn new(bids: Vec<f64>, groups: Vec<u8>) -> Result<Self> {
        if bids.len() != groups.len() {
            return Err(Error::LengthMismatch { expected: bids.len(), got: groups.len() });
        }
        if groups.iter().any(|&g| g > 1) {
            return Err(Error::InvalidParameter("group labels must be 0 or 1".into()));
        }
        let ones = groups.iter().filter(|&&g| g == 1).count();
        let zeros = groups.len() - ones;
        if ones == 0 || zeros == 0 || ones.abs_diff(zeros) > 1 {
            return Err(Error::InvalidParameter(format!("unbalanced split {zeros}/{ones}")));
        }
        Ok(Self { bids, groups })
    }

    pub fn split(bids: Vec<f64>, seed: u64) -> Result<Self> {
        let groups = random_split(bids.len(), seed)?;
        Self::new(bids, groups)
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn groups(&self) -> &[u8] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn group(&self, g: u8) -> Vec<f64> {
        self.bids.iter().zip(&self.groups).filter(|(_, &k)| k == g).map(|(&b, _)| b).collect()
    }

    /// Same split with one bid replaced.
    pub fn with_bid(&self, i: usize, bid: f64) -> Self {
        let mut out = self.clone();
        out.bids[i] = bid;
        out
    }
}

/// Prices quoted in one round: `group_prices[g]` applies to members of group `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionPrices {
    pub group_prices: [f64; 2],
    pub per_bidder: Vec<f64>,
}

/// Bid-independent auction prices: one estimate per group, each computed from
/// the opposite group's bids.
pub fn auction_prices(bids: &BidSet, estimator: &Estimator, grid: &SupportGrid, range: PriceRange) -> Result<AuctionPrices> {
    let mut group_prices = [0.0; 2];
    for (g, slot) in group_prices.iter_mut().enumerate() {
        let opposite = bids.group(1 - g as u8);
        *slot = estimator
            .price(&opposite, grid, range)
            .map_err(|e| Error::Group { group: g, source: Box::new(e) })?;
    }
    let per_bidder = bids.groups.iter().map(|&g| group_prices[g as usize]).collect();
    Ok(AuctionPrices { group_prices, per_bidder })
}

/// Result of one mechanism round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub estimator: EstimatorId,
    pub group_prices: [f64; 2],
    pub auction_prices: Vec<f64>,
    pub auction_allocations: Vec<bool>,
    pub posted_price: f64,
    pub auction_revenue: f64,
    /// `p * (1 - F(p))` under the true CDF, when one was supplied.
    pub posted_expected_revenue_per_buyer: Option<f64>,
}

impl RoundOutcome {
    pub const CSV_HEADER: [&'static str; 7] = [
        "round",
        "estimator",
        "price_group0",
        "price_group1",
        "posted_price",
        "auction_revenue",
        "posted_expected_revenue",
    ];

    pub fn csv_row(&self, round: usize) -> Vec<String> {
        vec![
            round.to_string(),
            self.estimator.to_string(),
            self.group_prices[0].to_string(),
            self.group_prices[1].to_string(),
            self.posted_price.to_string(),
            self.auction_revenue.to_string(),
            self.posted_expected_revenue_per_buyer.map(|r| r.to_string()).unwrap_or_default(),
        ]
    }
}

/// Ground truth against which posted revenue is evaluated.
pub trait Cdf {
    fn cdf_at(&self, v: f64) -> f64;
}

impl Cdf for ValueDistribution {
    fn cdf_at(&self, v: f64) -> f64 {
        self.cdf(v)
    }
}

impl Cdf for GridFunction {
    fn cdf_at(&self, v: f64) -> f64 {
        self.interpolate(v)
    }
}

/// Auction phase, allocation and the posted price (the maximum auction price).
pub fn run_round(
    bids: &BidSet,
    estimator: &Estimator,
    grid: &SupportGrid,
    range: PriceRange,
    truth: Option<&dyn Cdf>,
) -> Result<RoundOutcome> {
    let prices = auction_prices(bids, estimator, grid, range)?;
    let auction_allocations: Vec<bool> = bids.bids.iter().zip(&prices.per_bidder).map(|(b, p)| b >= p).collect();
    let auction_revenue = prices
        .per_bidder
        .iter()
        .zip(&auction_allocations)
        .filter(|(_, &x)| x)
        .map(|(p, _)| p)
        .sum();
    let posted_price = prices.group_prices[0].max(prices.group_prices[1]);
    Ok(RoundOutcome {
        estimator: estimator.id(),
        group_prices: prices.group_prices,
        auction_prices: prices.per_bidder,
        auction_allocations,
        posted_price,
        auction_revenue,
        posted_expected_revenue_per_buyer: truth.map(|t| posted_price * (1.0 - t.cdf_at(posted_price))),
    })
}
