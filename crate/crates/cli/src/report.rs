use std::fmt::Write as _;
use std::path::PathBuf;

use bitbit_core::coverage::{CurvePoint, QubitEstimate};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

/// Thresholds every report carries in addition to the configured one.
pub const STANDARD_THRESHOLDS: [f64; 2] = [0.99, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool_version: String,
    /// The only field that differs between identical runs.
    pub generated_at: String,
    pub command: String,
    pub streamed: bool,
    pub config: serde_json::Value,
    pub dataset: DatasetSummary,
    pub labels: Vec<LabelEntry>,
    pub thresholds: Vec<f64>,
    pub replicates: Vec<ReplicateReport>,
    pub aggregates: Vec<Aggregate>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub input: PathBuf,
    pub test_input: Option<PathBuf>,
    pub n_samples: usize,
    pub n_test_samples: Option<usize>,
    pub n_features: usize,
    pub n_classes: usize,
    pub q_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub replicate: usize,
    pub seed: u64,
    pub train_samples: u64,
    pub test_samples: u64,
    /// One per entry of the report's `thresholds`.
    pub estimates: Vec<QubitEstimate>,
    pub curve: Vec<CurvePoint>,
}

impl ReplicateReport {
    pub fn estimate(&self, threshold: f64) -> Option<&QubitEstimate> {
        self.estimates.iter().find(|e| e.threshold == threshold)
    }
}

/// `Q_dataset` statistics at one threshold over the replicates that reached it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub threshold: f64,
    pub q_dataset: Vec<Option<usize>>,
    pub covered_replicates: usize,
    pub uncovered_replicates: usize,
    pub mean_q_dataset: Option<f64>,
    /// Sample standard deviation; needs two covered replicates.
    pub std_q_dataset: Option<f64>,
}

impl Aggregate {
    pub fn from_replicates(threshold: f64, reps: &[ReplicateReport]) -> Self {
        let q_dataset: Vec<Option<usize>> = reps
            .iter()
            .map(|r| r.estimate(threshold).and_then(|e| e.q_dataset))
            .collect();
        let covered: Vec<f64> = q_dataset.iter().flatten().map(|&q| q as f64).collect();
        let n = covered.len();
        let mean = (n > 0).then(|| covered.iter().sum::<f64>() / n as f64);
        let std = match mean {
            Some(m) if n > 1 => Some(
                (covered.iter().map(|q| (q - m) * (q - m)).sum::<f64>() / (n - 1) as f64).sqrt(),
            ),
            _ => None,
        };
        Self {
            threshold,
            covered_replicates: n,
            uncovered_replicates: q_dataset.len() - n,
            q_dataset,
            mean_q_dataset: mean,
            std_q_dataset: std,
        }
    }
}

/// Configured threshold plus the standard ones, ascending and without repeats.
pub fn report_thresholds(configured: f64) -> Vec<f64> {
    let mut t: Vec<f64> = STANDARD_THRESHOLDS.to_vec();
    t.push(configured);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Plain-text summary of a report.
pub fn summarize(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} report (schema {}, bitbit {}, generated {})",
        r.command, r.schema_version, r.tool_version, r.generated_at
    );
    let d = &r.dataset;
    let _ = writeln!(out, "input: {}", d.input.display());
    if let Some(t) = &d.test_input {
        let _ = writeln!(out, "test input: {}", t.display());
    }
    let _ = writeln!(
        out,
        "{} samples, {} features, {} classes (class register {} qubits){}",
        d.n_samples,
        d.n_features,
        d.n_classes,
        d.q_y,
        if r.streamed { ", streamed" } else { "" }
    );
    let names: Vec<String> = r
        .labels
        .iter()
        .map(|l| format!("{}={}", l.id, l.name))
        .collect();
    let _ = writeln!(out, "labels: {}", names.join(" "));
    let _ = writeln!(out);
    for a in &r.aggregates {
        let _ = writeln!(
            out,
            "threshold {}: mean Q_dataset {} (sd {}) over {} replicates, {} uncovered",
            a.threshold,
            opt(a.mean_q_dataset.map(|m| format!("{m:.2}"))),
            opt(a.std_q_dataset.map(|s| format!("{s:.2}"))),
            a.covered_replicates,
            a.uncovered_replicates
        );
    }
    let _ = writeln!(out);
    let mut header = String::from("replicate  seed");
    for t in &r.thresholds {
        let _ = write!(header, "  Q({t})");
    }
    let _ = writeln!(out, "{header}");
    for rep in &r.replicates {
        let mut line = format!("{:>9}  {:>4}", rep.replicate, rep.seed);
        for t in &r.thresholds {
            let q = rep.estimate(*t).and_then(|e| e.q_dataset);
            let _ = write!(
                line,
                "  {:>width$}",
                opt(q),
                width = format!("Q({t})").len()
            );
        }
        let _ = writeln!(out, "{line}");
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "warnings:");
        for w in &r.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}
