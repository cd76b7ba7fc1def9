use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mapp_core::experiment::regret_histogram;
use mapp_core::ingest::write_summary_csv;
use mapp_core::online::BidSchedule;
use mapp_core::report::{write_histogram_csv, write_json, write_online_csv, write_regret_csv};
use mapp_core::seed::{substream, Stream};
use mapp_core::{
    ingest_corpus, run_online_family, run_realbench, run_simulation, BenchConfig, BenchResult, BidCorpus,
    FamilySampler, OnlineConfig,
};
use serde_json::json;

use crate::args::{IngestArgs, OnlineArgs, RealbenchArgs, RoundsArgs, SimulateArgs};
use crate::manifest::{bench_stats, ModelSummary, OnlineSummary, RunManifest};
use crate::UsageError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const ONLINE_FILE: &str = "online.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRANSFORM_FILE: &str = "transform.json";

pub fn regret_file(estimator: mapp_core::EstimatorId) -> String {
    format!("regret_{estimator}.csv")
}

/// Output directory with a list of what was written to it.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> mapp_core::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, mut manifest: RunManifest) -> Result<RunManifest> {
        self.written.push(MANIFEST_FILE.to_string());
        manifest.outputs = std::mem::take(&mut self.written);
        let path = self.dir.join(MANIFEST_FILE);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        write_json(&manifest, BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
        manifest.verify_outputs(&self.dir)?;
        Ok(manifest)
    }
}

fn bench_config(args: &RoundsArgs) -> BenchConfig {
    BenchConfig {
        rounds: args.rounds,
        estimators: dedup(&args.estimators),
        seed: args.seed,
        training_rounds: args.training_rounds,
        training_bids: args.training_bids,
        ..Default::default()
    }
}

fn dedup<T: Ord + Copy>(items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.sort();
    v.dedup();
    v
}

fn write_bench(out: &mut Outputs, cfg: &BenchConfig, result: &BenchResult, bins: usize) -> Result<()> {
    for &est in &cfg.estimators {
        let records = result.records.iter().filter(|((e, _), _)| *e == est).flat_map(|(_, r)| r);
        out.write(&regret_file(est), |w| write_regret_csv(records, w))?;
    }
    out.write(HISTOGRAM_FILE, |w| write_histogram_csv(&regret_histogram(result, bins), w))?;
    if let Some(model) = &result.model {
        out.write(MODEL_FILE, |w| model.write_json(w))?;
    }
    Ok(())
}

fn bench_manifest(command: &str, config: serde_json::Value, cfg: &BenchConfig, result: &BenchResult) -> RunManifest {
    let mut m = RunManifest::new(command, config);
    m.seeds.insert("master".into(), cfg.seed);
    if result.model.is_some() {
        m.seeds.insert("training".into(), substream(cfg.seed, Stream::Training));
    }
    m.stats = bench_stats(result);
    m.model = result.model.as_deref().map(ModelSummary::from);
    m
}

pub fn simulate(args: &SimulateArgs, out_dir: &Path) -> Result<RunManifest> {
    let cfg = bench_config(&args.rounds);
    let n_bids = dedup(&args.rounds.n_bids);
    let result = run_simulation(&cfg, args.family, &n_bids)?;
    let mut out = Outputs::create(out_dir)?;
    write_bench(&mut out, &cfg, &result, args.rounds.bins)?;
    let config = json!({
        "family": args.family,
        "n_bids": n_bids,
        "bins": args.rounds.bins,
        "bench": cfg,
        "family_ranges": FamilySampler::new(args.family),
    });
    out.finish(bench_manifest("simulate", config, &cfg, &result))
}

pub fn online(args: &OnlineArgs, out_dir: &Path) -> Result<RunManifest> {
    let bids = if args.scaled {
        BidSchedule::SCALED_DEFAULT
    } else {
        BidSchedule::Fixed { exploration: args.exploration_bids, exploitation: args.exploitation_bids }
    };
    let cfg = OnlineConfig { bids, refresh_model: args.refresh_model, ..OnlineConfig::new(args.horizon, args.seed) };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let result = run_online_family(&cfg, &FamilySampler::new(args.family))?;

    let mut out = Outputs::create(out_dir)?;
    out.write(ONLINE_FILE, |w| write_online_csv(&result.records, &result.cumulative, w))?;
    out.write(MODEL_FILE, |w| result.model.write_json(w))?;

    let (m1, m2) = cfg.bids.counts(cfg.horizon);
    let mut m = RunManifest::new("online", json!({ "family": args.family, "online": cfg }));
    m.seeds.insert("master".into(), cfg.master_seed);
    m.model = Some(ModelSummary::from(result.model.as_ref()));
    m.online = Some(OnlineSummary {
        exploration_rounds: result.exploration_rounds,
        exploration_bids: m1,
        exploitation_bids: m2,
        skipped_rounds: result.skipped.len(),
        skipped: result.skipped.clone(),
        final_avg_cumulative_regret: result.cumulative.last().copied(),
    });
    out.finish(m)
}

fn read_corpus(path: &Path) -> Result<BidCorpus> {
    let file = File::open(path).with_context(|| format!("cannot open input file {}", path.display()))?;
    ingest_corpus(std::io::BufReader::new(file)).with_context(|| format!("invalid corpus {}", path.display()))
}

pub fn ingest(args: &IngestArgs, out_dir: &Path) -> Result<RunManifest> {
    let corpus = read_corpus(&args.input)?;
    let rows = corpus.summary_stats(None)?;
    let mut out = Outputs::create(out_dir)?;
    out.write(SUMMARY_FILE, |w| write_summary_csv(&rows, w))?;
    out.write(TRANSFORM_FILE, |w| write_json(corpus.transform(), w))?;
    let m = RunManifest::new("ingest", json!({ "input": args.input, "categories": rows }));
    out.finish(m)
}

pub fn realbench(args: &RealbenchArgs, out_dir: &Path) -> Result<RunManifest> {
    let corpus = read_corpus(&args.input)?;
    let split = corpus.experiment_split(&args.test_category)?;
    let cfg = bench_config(&args.rounds);
    let n_bids = dedup(&args.rounds.n_bids);
    let result = run_realbench(&cfg, &split, &n_bids)?;
    let mut out = Outputs::create(out_dir)?;
    write_bench(&mut out, &cfg, &result, args.rounds.bins)?;
    out.write(TRANSFORM_FILE, |w| write_json(corpus.transform(), w))?;
    let config = json!({
        "input": args.input,
        "test_category": split.test_category,
        "train_categories": split.train.keys().collect::<Vec<_>>(),
        "n_bids": n_bids,
        "bins": args.rounds.bins,
        "bench": cfg,
    });
    out.finish(bench_manifest("realbench", config, &cfg, &result))
}
