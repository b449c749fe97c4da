use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeSummary, SlotMetrics};
use super::policy::PolicyKind;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub policy: String,
    pub seed: u64,
    pub slot: u64,
    pub avg_power_w: f64,
    pub avg_drops: f64,
    pub avg_aoi_slots: f64,
    pub avg_aoi_s: f64,
    pub avg_utility: f64,
}

impl MetricsRow {
    pub fn new(param: &str, value: f64, policy: PolicyKind, seed: u64, m: &SlotMetrics) -> Self {
        Self {
            sweep_param: param.to_string(),
            sweep_value: value,
            policy: policy.name().to_string(),
            seed,
            slot: m.slot,
            avg_power_w: m.avg_power_w,
            avg_drops: m.avg_drops,
            avg_aoi_slots: m.avg_aoi_slots,
            avg_aoi_s: m.avg_aoi_s,
            avg_utility: m.avg_utility,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub policy: String,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation across seeds; zero for a single seed.
    pub stddev: f64,
    pub n: usize,
}

pub const METRICS: [&str; 5] = ["avg_power_w", "avg_drops", "avg_aoi_slots", "avg_aoi_s", "avg_utility"];

fn metric(s: &EpisodeSummary, name: &str) -> f64 {
    match name {
        "avg_power_w" => s.avg_power_w,
        "avg_drops" => s.avg_drops,
        "avg_aoi_slots" => s.avg_aoi_slots,
        "avg_aoi_s" => s.avg_aoi_s,
        "avg_utility" => s.avg_utility,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Mean and sample standard deviation of a slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Groups episode summaries by `(value, policy)` in first-seen order.
pub fn summarize(param: &str, episodes: &[(f64, PolicyKind, EpisodeSummary)]) -> Vec<SummaryRow> {
    let mut cells: Vec<(f64, PolicyKind, Vec<&EpisodeSummary>)> = Vec::new();
    for (value, kind, summary) in episodes {
        match cells.iter_mut().find(|(v, k, _)| v == value && k == kind) {
            Some(cell) => cell.2.push(summary),
            None => cells.push((*value, *kind, vec![summary])),
        }
    }
    let mut out = Vec::new();
    for (value, kind, sums) in cells {
        for name in METRICS {
            let xs: Vec<f64> = sums.iter().map(|s| metric(s, name)).collect();
            let (mean, stddev) = mean_std(&xs);
            out.push(SummaryRow {
                sweep_param: param.to_string(),
                sweep_value: value,
                policy: kind.name().to_string(),
                metric: name.to_string(),
                mean,
                stddev,
                n: xs.len(),
            });
        }
    }
    out
}

const METRICS_HEADER: [&str; 10] = [
    "sweep_param",
    "sweep_value",
    "policy",
    "seed",
    "slot",
    "avg_power_w",
    "avg_drops",
    "avg_aoi_slots",
    "avg_aoi_s",
    "avg_utility",
];

const SUMMARY_HEADER: [&str; 7] = ["sweep_param", "sweep_value", "policy", "metric", "mean", "stddev", "n"];

fn write_rows<T: Serialize>(rows: &[T], header: &[&str], w: impl Write) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>> {
    let mut csv = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes the header even when there are no rows.
pub fn write_metrics_csv(rows: &[MetricsRow], w: impl Write) -> Result<()> {
    write_rows(rows, &METRICS_HEADER, w)
}

pub fn read_metrics_csv(r: impl Read) -> Result<Vec<MetricsRow>> {
    read_rows(r)
}

pub fn write_summary_csv(rows: &[SummaryRow], w: impl Write) -> Result<()> {
    write_rows(rows, &SUMMARY_HEADER, w)
}

pub fn read_summary_csv(r: impl Read) -> Result<Vec<SummaryRow>> {
    read_rows(r)
}
