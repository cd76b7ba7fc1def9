//! Real-data pipeline: labelled raw bids are log-transformed and mapped by one
//! global affine transform onto the valuation support.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DEFAULT_HI, DEFAULT_LO};

/// Affine map `log(bid) -> offset + scale * log(bid)` sending the global
/// log-range onto `[target_lo, target_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub log_min: f64,
    pub log_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
    pub scale: f64,
    pub offset: f64,
}

impl Transform {
    fn fit(log_min: f64, log_max: f64, target_lo: f64, target_hi: f64) -> Result<Self> {
        if !(log_max > log_min) {
            return Err(Error::DegenerateCorpus(format!("global log-min {log_min} equals log-max {log_max}")));
        }
        let scale = (target_hi - target_lo) / (log_max - log_min);
        Ok(Self { log_min, log_max, target_lo, target_hi, scale, offset: target_lo - scale * log_min })
    }

    pub fn apply(&self, raw_bid: f64) -> f64 {
        (self.target_lo + self.scale * (raw_bid.ln() - self.log_min)).clamp(self.target_lo, self.target_hi)
    }

    /// Rescaled value back to log-bid units.
    pub fn invert(&self, value: f64) -> f64 {
        self.log_min + (value - self.target_lo) / self.scale
    }
}

/// Per-category log-bid summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: String,
    pub count: usize,
    pub log_min: f64,
    pub log_max: f64,
}

/// Labelled bids with their rescaled values.
#[derive(Debug, Clone, PartialEq)]
pub struct BidCorpus {
    raw: BTreeMap<String, Vec<f64>>,
    rescaled: BTreeMap<String, Vec<f64>>,
    transform: Transform,
}

impl BidCorpus {
    /// Builds the corpus from raw positive bids grouped by category.
    pub fn from_categories(raw: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::DegenerateCorpus("no categories".into()));
        }
        let mut log_min = f64::INFINITY;
        let mut log_max = f64::NEG_INFINITY;
        for (label, bids) in &raw {
            if bids.is_empty() {
                return Err(Error::DegenerateCorpus(format!("category {label:?} is empty")));
            }
            for (i, &b) in bids.iter().enumerate() {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(Error::BadRow { row: i + 1, message: format!("non-positive bid {b} in {label:?}") });
                }
                log_min = log_min.min(b.ln());
                log_max = log_max.max(b.ln());
            }
        }
        let transform = Transform::fit(log_min, log_max, DEFAULT_LO, DEFAULT_HI)?;
        let rescaled = raw
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|&b| transform.apply(b)).collect()))
            .collect();
        Ok(Self { raw, rescaled, transform })
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.raw.keys().map(String::as_str)
    }

    pub fn raw(&self, category: &str) -> Result<&[f64]> {
        self.raw.get(category).map(Vec::as_slice).ok_or_else(|| Error::UnknownCategory(category.into()))
    }

    /// Bids of one category on the valuation scale.
    pub fn rescaled(&self, category: &str) -> Result<&[f64]> {
        self.rescaled.get(category).map(Vec::as_slice).ok_or_else(|| Error::UnknownCategory(category.into()))
    }

    pub fn summary(&self, category: &str) -> Result<CategorySummary> {
        let bids = self.raw(category)?;
        let logs = bids.iter().map(|b| b.ln());
        Ok(CategorySummary {
            category: category.to_string(),
            count: bids.len(),
            log_min: logs.clone().fold(f64::INFINITY, f64::min),
            log_max: logs.fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Summaries for the requested categories, or for all when `filter` is `None`.
    pub fn summary_stats(&self, filter: Option<&[&str]>) -> Result<Vec<CategorySummary>> {
        match filter {
            None => self.categories().map(|c| self.summary(c)).collect(),
            Some([]) => Err(Error::InvalidParameter("empty category filter".into())),
            Some(list) => list.iter().map(|c| self.summary(c)).collect(),
        }
    }

    /// Test category versus every other category.
    pub fn experiment_split(&self, test_category: &str) -> Result<ExperimentSplit> {
        if self.raw.len() < 2 {
            return Err(Error::TooFew { needed: 2, got: self.raw.len() });
        }
        let test = self.rescaled(test_category)?.to_vec();
        let train = self
            .rescaled
            .iter()
            .filter(|(k, _)| k.as_str() != test_category)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(ExperimentSplit { test_category: test_category.to_string(), train, test })
    }
}

/// Reads `category,bid` CSV records.
pub fn ingest_corpus<R: Read>(reader: R) -> Result<BidCorpus> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::BadRow { row: 0, message: format!("missing column {name:?}") })
    };
    let (cat_col, bid_col) = (col("category")?, col("bid")?);
    let mut raw: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let label = rec.get(cat_col).unwrap_or_default();
        if label.is_empty() {
            return Err(Error::BadRow { row, message: "empty category label".into() });
        }
        let field = rec.get(bid_col).unwrap_or_default();
        let bid: f64 = field
            .parse()
            .map_err(|_| Error::BadRow { row, message: format!("unparseable bid {field:?}") })?;
        if !(bid > 0.0) || !bid.is_finite() {
            return Err(Error::BadRow { row, message: format!("non-positive bid {bid}") });
        }
        raw.entry(label.to_string()).or_default().push(bid);
    }
    BidCorpus::from_categories(raw)
}

/// Writes summaries as `type,count,log_min,log_max` with six decimals.
pub fn write_summary_csv<W: Write>(rows: &[CategorySummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["type", "count", "log_min", "log_max"])?;
    for r in rows {
        out.write_record([r.category.clone(), r.count.to_string(), format!("{:.6}", r.log_min), format!("{:.6}", r.log_max)])?;
    }
    out.flush()?;
    Ok(())
}

/// Training pools and the held-out test pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSplit {
    pub test_category: String,
    pub train: BTreeMap<String, Vec<f64>>,
    pub test: Vec<f64>,
}

/// `m` draws with replacement from a pool.
pub fn resample(pool: &[f64], m: usize, seed: u64) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m).map(|_| pool[rng.random_range(0..pool.len())]).collect())
}
