//! Precision / recall / F1 against a reference alignment, and run comparison.
//!
//! Percentages are truncated to one decimal (86.67 is reported as 86.6).
//! They are computed in exact integer arithmetic so values such as 75.0 never
//! come out as 74.9 through floating-point error.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::alignment::{Correspondence, EQUIVALENCE};
use crate::parser::ReferenceAlignment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub inter: usize,
    pub pred: usize,
    #[serde(rename = "ref")]
    pub reference: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Metrics from counts. F1 uses the unrounded precision and recall,
    /// which reduces to `2 * inter / (pred + ref)`.
    pub fn from_counts(inter: usize, pred: usize, reference: usize) -> Self {
        let precision = truncated_percent(inter, pred);
        let recall = truncated_percent(inter, reference);
        let f1 = if inter == 0 { 0.0 } else { truncated_percent(2 * inter, pred + reference) };
        Self { inter, pred, reference, precision, recall, f1 }
    }

    /// Flat JSON report: `inter`, `pred`, `ref`, percentages and `seconds`.
    pub fn to_report_json(&self, seconds: f64) -> serde_json::Value {
        serde_json::json!({
            "inter": self.inter,
            "pred": self.pred,
            "ref": self.reference,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "seconds": seconds,
        })
    }

    pub fn from_report_json(v: &serde_json::Value) -> Option<(Self, f64)> {
        let n = |k: &str| v.get(k).and_then(serde_json::Value::as_u64).map(|x| x as usize);
        let inter = n("inter")?;
        let pred = n("pred")?;
        let reference = n("ref")?;
        let seconds = v.get("seconds").and_then(serde_json::Value::as_f64).unwrap_or(0.0);
        Some((Self::from_counts(inter, pred, reference), seconds))
    }
}

impl std::fmt::Display for Metrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P {:.1}  R {:.1}  F1 {:.1}  (inter {}, pred {}, ref {})",
            self.precision, self.recall, self.f1, self.inter, self.pred, self.reference
        )
    }
}

/// `floor(1000 * num / den) / 10`, or 0 when `den == 0`.
fn truncated_percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        return 0.0;
    }
    let tenths = (num as u128 * 1000) / den as u128;
    tenths as f64 / 10.0
}

/// Scores predictions by exact (source, target) identity over `=` cells.
///
/// Predictions and references are deduplicated first. Reference cells with
/// other relations count toward `ref` but never match.
pub fn evaluate(pred: &[Correspondence], reference: &ReferenceAlignment) -> Metrics {
    let predicted: HashSet<(&str, &str, &str)> =
        pred.iter().map(|c| (c.source.as_str(), c.target.as_str(), c.relation.as_str())).collect();
    let refs: HashSet<(&str, &str, &str)> =
        reference.cells.iter().map(|c| (c.entity1.as_str(), c.entity2.as_str(), c.relation.as_str())).collect();
    let inter = predicted.iter().filter(|(_, _, rel)| *rel == EQUIVALENCE).filter(|key| refs.contains(*key)).count();
    Metrics::from_counts(inter, predicted.len(), refs.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub metrics: Metrics,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<RunSummary>,
}

/// Orders runs by descending F1, then ascending elapsed time.
pub fn compare(runs: Vec<RunSummary>) -> Comparison {
    let mut rows = runs;
    rows.sort_by(|a, b| b.metrics.f1.total_cmp(&a.metrics.f1).then(a.seconds.total_cmp(&b.seconds)));
    Comparison { rows }
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>8}",
            "run", "P", "R", "F1", "inter", "pred", "ref", "seconds"
        );
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6}  {:>6}  {:>6}  {:>8.1}",
                r.name, m.precision, m.recall, m.f1, m.inter, m.pred, m.reference, r.seconds
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut v = r.metrics.to_report_json(r.seconds);
                    v["name"] = serde_json::Value::String(r.name.clone());
                    v
                })
                .collect(),
        )
    }
}
