use serde::{Deserialize, Serialize};

/// Relation string used for class equivalence.
pub const EQUIVALENCE: &str = "=";

/// One matched pair of classes produced by an aligner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source: String,
    pub target: String,
    pub relation: String,
    pub score: f64,
    /// Name of the aligner (or file) that produced the pair.
    #[serde(default)]
    pub provenance: String,
}

impl Correspondence {
    /// An equivalence correspondence. `score` is clamped into `[0, 1]`.
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        score: f64,
        provenance: impl Into<String>,
    ) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            relation: EQUIVALENCE.to_string(),
            score: score.clamp(0.0, 1.0),
            provenance: provenance.into(),
        }
    }
}
