//! Vector-retrieval aligners (TF-IDF or an external embedding provider).

mod embed;
mod matrix;
mod tfidf;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{embed, EmbeddingProvider, HttpEmbedding, MockEmbedding};
pub use matrix::{cosine_topk, cosine_topk_with, CandidateList, VectorMatrix};
pub use tfidf::{tfidf_fit, TfidfModel};

use crate::alignment::Correspondence;
use crate::encoder::{EncodedCorpus, EncodingView};
use crate::par::Execution;

/// Dimension of vectors produced by the offline mock provider.
pub const MOCK_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetrievalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("embedding endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("embedding provider error: {0}")]
    ProviderError(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("corpora encoded under different views ({source_view} vs {target_view})")]
    ViewMismatch { source_view: EncodingView, target_view: EncodingView },
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalBackend {
    Tfidf,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub backend: RetrievalBackend,
    pub top_k: usize,
    pub threshold: f64,
    /// Embedding endpoint base URL, or `mock` for the offline provider.
    #[serde(default)]
    pub provider_endpoint: Option<String>,
    #[serde(default = "default_embedding_model")]
    pub model: String,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Seed of the mock provider.
    #[serde(default)]
    pub seed: u64,
}

fn default_embedding_model() -> String {
    "text-embedding".to_string()
}

fn default_batch() -> usize {
    64
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            backend: RetrievalBackend::Tfidf,
            top_k: 10,
            threshold: 0.2,
            provider_endpoint: None,
            model: default_embedding_model(),
            batch_size: default_batch(),
            seed: 0,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.top_k == 0 {
            return Err(RetrievalError::InvalidConfig("top_k must be at least 1".into()));
        }
        // thresholds above 1 are accepted and simply match nothing
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(RetrievalError::InvalidConfig(format!("threshold {} below 0", self.threshold)));
        }
        if self.batch_size == 0 {
            return Err(RetrievalError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Embedding provider described by this config.
    pub fn provider(&self) -> Box<dyn EmbeddingProvider> {
        match self.provider_endpoint.as_deref() {
            None | Some("mock") => Box::new(MockEmbedding::new(MOCK_DIM, self.seed)),
            Some(url) => Box::new(HttpEmbedding::new(url, &self.model, Duration::from_secs(60))),
        }
    }
}

/// Source and target vectors over a shared space.
pub fn vectorize(
    src: &[String],
    tgt: &[String],
    cfg: &RetrievalConfig,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<(VectorMatrix, VectorMatrix), RetrievalError> {
    match cfg.backend {
        RetrievalBackend::Tfidf => {
            // fit on the union so both sides share one vocabulary
            let joint: Vec<&String> = src.iter().chain(tgt).collect();
            let all = TfidfModel::fit(&joint)?.transform(&joint);
            Ok((all.slice_rows(0, src.len()), all.slice_rows(src.len(), joint.len())))
        }
        RetrievalBackend::Embedding => {
            let owned;
            let provider = match provider {
                Some(p) => p,
                None => {
                    owned = cfg.provider();
                    owned.as_ref()
                }
            };
            Ok((embed(src, provider, cfg.batch_size)?, embed(tgt, provider, cfg.batch_size)?))
        }
    }
}

/// Top-k candidate targets for every source text.
pub fn candidates(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &RetrievalConfig,
    provider: Option<&dyn EmbeddingProvider>,
    exec: Execution,
) -> Result<CandidateList, RetrievalError> {
    if src.view != tgt.view {
        return Err(RetrievalError::ViewMismatch { source_view: src.view, target_view: tgt.view });
    }
    cfg.validate()?;
    if src.is_empty() || tgt.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let (s, t) = vectorize(&src.texts, &tgt.texts, cfg, provider)?;
    cosine_topk_with(&s, &t, cfg.top_k, exec)
}

pub fn align_retrieval(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &RetrievalConfig,
) -> Result<Vec<Correspondence>, RetrievalError> {
    align_retrieval_with(src, tgt, cfg, None, Execution::default())
}

/// Emits every top-k candidate whose similarity reaches the threshold,
/// ordered by source then rank.
pub fn align_retrieval_with(
    src: &EncodedCorpus,
    tgt: &EncodedCorpus,
    cfg: &RetrievalConfig,
    provider: Option<&dyn EmbeddingProvider>,
    exec: Execution,
) -> Result<Vec<Correspondence>, RetrievalError> {
    let cands = candidates(src, tgt, cfg, provider, exec)?;
    let provenance = match cfg.backend {
        RetrievalBackend::Tfidf => "retrieval:tfidf",
        RetrievalBackend::Embedding => "retrieval:embedding",
    };
    Ok(cands
        .lists
        .iter()
        .enumerate()
        .flat_map(|(i, list)| {
            list.iter()
                .filter(|(_, s)| *s >= cfg.threshold)
                .map(move |&(j, s)| Correspondence::new(&src.iris[i], &tgt.iris[j], s, provenance))
        })
        .collect())
}
