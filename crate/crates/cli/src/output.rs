//! Result CSV and run manifest.

use std::io::Write;

use serde::Serialize;

use rsosim_core::sim::{ExperimentReport, IncompleteMethod};

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "distribution",
    "method",
    "test",
    "n",
    "power_target",
    "injected_count",
    "phase",
    "metric",
    "value",
    "ci_lo",
    "ci_hi",
    "reps",
    "seed",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the rows of one report. Floats use Rust's shortest round-trip
/// decimal form, which never switches to exponent notation.
pub fn write_report<W: Write>(out: &mut csv::Writer<W>, report: &ExperimentReport) -> csv::Result<usize> {
    let cfg = &report.config;
    let power = if cfg.experiment.needs_mu2() { cfg.power_target } else { None };
    for m in &report.measurements {
        let (lo, hi) = match m.ci {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => (String::new(), String::new()),
        };
        out.write_record([
            cfg.experiment.as_str().to_string(),
            cfg.distribution.kind.label().to_string(),
            m.method.clone().unwrap_or_default(),
            opt(m.test.map(|t| t.as_str())),
            cfg.n.to_string(),
            opt(power),
            opt(m.injected_count),
            m.phase.as_str().to_string(),
            m.metric.as_str().to_string(),
            m.value.to_string(),
            lo,
            hi,
            m.reps.to_string(),
            cfg.master_seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(report.measurements.len())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionSummary {
    pub experiment: String,
    pub distribution: String,
    pub n: usize,
    pub rows: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub incomplete: Vec<IncompleteMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub started: String,
    pub finished: String,
    pub master_seed: u64,
    pub jobs: usize,
    pub results: String,
    pub status: &'static str,
    /// Configuration after command-line overrides; re-running it with the
    /// same seed reproduces the results file.
    pub config_toml: String,
    pub conditions: Vec<ConditionSummary>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
