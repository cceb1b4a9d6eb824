//! Self-describing reports: a JSON tree embedding the resolved configuration and a flat CSV.

use super::stats::EstimateReport;
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    JsonTree,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json-tree" | "json" => Ok(Format::JsonTree),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown format `{s}` (expected json-tree or csv)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::JsonTree => "json-tree",
            Format::Csv => "csv",
        })
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: &'a R,
}

/// Pretty JSON with the command, seed and configuration next to the result.
pub fn to_json<C: Serialize, R: Serialize>(command: &str, seed: u64, config: &C, result: &R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope { command, seed, config, result }).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One CSV line. Point statistics without an interval leave the bounds empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub metric: String,
    pub point: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl Row {
    pub fn point(metric: impl Into<String>, point: f64, trials: u64, seed: u64) -> Self {
        Row { metric: metric.into(), point, ci_low: None, ci_high: None, trials, seed }
    }
}

impl From<&EstimateReport> for Row {
    fn from(r: &EstimateReport) -> Self {
        Row { metric: r.name.clone(), point: r.point, ci_low: Some(r.ci_low), ci_high: Some(r.ci_high), trials: r.trials, seed: r.seed }
    }
}

/// Header `metric, point, ci_low, ci_high, trials, seed` and one line per row.
pub fn to_csv(rows: &[Row]) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["metric", "point", "ci_low", "ci_high", "trials", "seed"]).map_err(io)?;
    }
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
