use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{RetrievalError, VectorMatrix};
use crate::http::{endpoint_url, JsonClient, TransportError};
use crate::par::map_bounded;

/// Source of text embeddings.
pub trait EmbeddingProvider: Send + Sync {
    /// Embeds one batch; the result must be in input order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError>;
}

/// Deterministic offline provider: every text maps to a pseudo-random unit
/// vector seeded from the text bytes and `seed`.
#[derive(Debug, Clone, Copy)]
pub struct MockEmbedding {
    pub dim: usize,
    pub seed: u64,
}

impl MockEmbedding {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(text.as_bytes()) ^ self.seed.rotate_left(17));
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}

impl EmbeddingProvider for MockEmbedding {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Client for an embeddings endpoint speaking
/// `{"input": [...], "model": ...}` -> `{"data": [{"index", "embedding"}]}`.
pub struct HttpEmbedding {
    url: String,
    model: String,
    client: JsonClient,
}

impl HttpEmbedding {
    pub fn new(endpoint: &str, model: &str, timeout: Duration) -> Self {
        Self { url: endpoint_url(endpoint, "embeddings"), model: model.to_string(), client: JsonClient::new(timeout) }
    }
}

impl EmbeddingProvider for HttpEmbedding {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RetrievalError> {
        let body = json!({ "input": texts, "model": self.model });
        let reply = self.client.post(&self.url, &body).map_err(|e| match e {
            TransportError::Unreachable(m) => RetrievalError::EndpointUnreachable(m),
            TransportError::Timeout => RetrievalError::EndpointUnreachable(format!("{}: timed out", self.url)),
            TransportError::Status { code, body } => RetrievalError::ProviderError(format!("HTTP {code}: {body}")),
            TransportError::Decode(m) => RetrievalError::ProviderError(m),
        })?;
        decode_embeddings(&reply, texts.len())
    }
}

fn decode_embeddings(reply: &Value, expected: usize) -> Result<Vec<Vec<f64>>, RetrievalError> {
    let data = reply
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| RetrievalError::ProviderError("response lacks a \"data\" array".into()))?;
    let mut out: Vec<Option<Vec<f64>>> = vec![None; expected];
    for (pos, item) in data.iter().enumerate() {
        let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
        let vector: Vec<f64> = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::ProviderError(format!("item {pos} lacks an embedding")))?
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| RetrievalError::ProviderError(format!("item {pos}: non-numeric value"))))
            .collect::<Result<_, _>>()?;
        let slot =
            out.get_mut(index).ok_or_else(|| RetrievalError::ProviderError(format!("index {index} out of range")))?;
        *slot = Some(vector);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| RetrievalError::ProviderError(format!("no embedding returned for input {i}"))))
        .collect()
}

/// Embeds `texts` in batches of `batch_size`, with at most `batch_size`
/// requests in flight, and returns L2-normalized rows in input order.
pub fn embed(
    texts: &[String],
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
) -> Result<VectorMatrix, RetrievalError> {
    if texts.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let batch_size = batch_size.max(1);
    let batches: Vec<&[String]> = texts.chunks(batch_size).collect();
    let results = map_bounded(&batches, batch_size, |batch| provider.embed_batch(batch));

    let mut rows = Vec::with_capacity(texts.len());
    let mut dim: Option<usize> = None;
    for (batch, result) in batches.iter().zip(results) {
        let vectors = result?;
        if vectors.len() != batch.len() {
            return Err(RetrievalError::ProviderError(format!(
                "expected {} embeddings, got {}",
                batch.len(),
                vectors.len()
            )));
        }
        for v in vectors {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => return Err(RetrievalError::DimensionMismatch { expected: d, got: v.len() }),
                _ => {}
            }
            rows.push(v);
        }
    }
    VectorMatrix::from_dense_rows(rows)
}
