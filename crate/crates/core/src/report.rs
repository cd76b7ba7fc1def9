//! CSV and JSON writers for run outputs.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::HistogramBin;
use crate::regret::RegretRecord;

fn fmt(x: f64) -> String {
    format!("{x:.10}")
}

fn record_row(r: &RegretRecord) -> Vec<String> {
    vec![r.round.to_string(), r.estimator.to_string(), r.n_bids.to_string(), fmt(r.price), fmt(r.opt_price), fmt(r.regret)]
}

/// Per-round regret table.
pub fn write_regret_csv<'a, W: Write>(records: impl IntoIterator<Item = &'a RegretRecord>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RegretRecord::CSV_HEADER)?;
    for r in records {
        out.write_record(record_row(r))?;
    }
    out.flush()?;
    Ok(())
}

pub const ONLINE_CSV_HEADER: [&str; 7] = ["round", "estimator", "n_bids", "price", "opt_price", "regret", "avg_cumulative_regret"];

/// Per-round regret with the running average `R_t`.
pub fn write_online_csv<W: Write>(records: &[RegretRecord], cumulative: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ONLINE_CSV_HEADER)?;
    for (r, c) in records.iter().zip(cumulative) {
        let mut row = record_row(r);
        row.push(fmt(*c));
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

pub const HISTOGRAM_CSV_HEADER: [&str; 4] = ["estimator", "bin_lo", "bin_hi", "count"];

pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HISTOGRAM_CSV_HEADER)?;
    for b in bins {
        out.write_record([b.estimator.to_string(), fmt(b.bin_lo), fmt(b.bin_hi), b.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
