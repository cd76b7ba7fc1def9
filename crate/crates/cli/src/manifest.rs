use std::collections::BTreeMap;
use std::path::Path;

use mapp_core::{BenchResult, EstimatorId, ExpFamilyModel};
use serde::{Deserialize, Serialize};

/// Record of a run: what was asked for, what came out, where it went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stats: Vec<EstimatorStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineSummary>,
    /// Output files, relative to the output directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: EstimatorId,
    pub n_bids: usize,
    pub rounds: usize,
    pub skipped: usize,
    pub mean_regret: f64,
    pub median_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub exploration_rounds: usize,
    pub exploration_bids: usize,
    pub exploitation_bids: usize,
    pub skipped_rounds: usize,
    pub skipped: Vec<(usize, String)>,
    pub final_avg_cumulative_regret: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let versions = [
            ("mapp-cli", env!("CARGO_PKG_VERSION")),
            ("mapp-core", mapp_core::VERSION),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            command: command.to_string(),
            config,
            seeds: BTreeMap::new(),
            versions,
            stats: Vec::new(),
            model: None,
            online: None,
            outputs: Vec::new(),
        }
    }

    /// Checks that every listed output exists under `dir` and is non-empty.
    pub fn verify_outputs(&self, dir: &Path) -> std::io::Result<()> {
        for name in &self.outputs {
            let meta = std::fs::metadata(dir.join(name))?;
            if meta.len() == 0 {
                return Err(std::io::Error::other(format!("output {name} is empty")));
            }
        }
        Ok(())
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub fn bench_stats(result: &BenchResult) -> Vec<EstimatorStats> {
    result
        .records
        .iter()
        .map(|(&(estimator, n_bids), recs)| {
            let regrets: Vec<f64> = recs.iter().map(|r| r.regret).collect();
            let mean = if regrets.is_empty() { f64::NAN } else { regrets.iter().sum::<f64>() / regrets.len() as f64 };
            EstimatorStats {
                estimator,
                n_bids,
                rounds: regrets.len(),
                skipped: result.skipped.get(&(estimator, n_bids)).map_or(0, Vec::len),
                mean_regret: mean,
                median_regret: median(&regrets),
            }
        })
        .collect()
}

impl From<&ExpFamilyModel> for ModelSummary {
    fn from(m: &ExpFamilyModel) -> Self {
        Self { k: m.k(), eigenvalues: m.eigenvalues().to_vec(), spectrum: m.spectrum().to_vec() }
    }
}
