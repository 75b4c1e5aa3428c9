//! Text-generation client layer.
//!
//! A [`LlmBackend`] performs single completions; [`LlmClient`] adds
//! batching with a bounded number of in-flight requests and the two-option
//! decision procedure built on first-token log-probabilities.

mod http;
mod mock;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpCompletion;
pub use mock::{MockLlm, MockPolicy, MOCK_DEFAULT_CONFIDENCE};

use crate::par::map_bounded;
use crate::postprocess::{map_label, LabelMapperConfig};

/// Number of top candidates requested per generated position.
pub const TOP_LOGPROBS: u32 = 20;

/// Upper limit on concurrent requests, whatever the batch size.
pub const MAX_IN_FLIGHT: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("LLM endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("LLM provider error: {0}")]
    ProviderError(String),
    #[error("LLM request timed out")]
    Timeout,
    #[error("provider returned no log-probabilities")]
    LogprobsUnsupported,
    #[error("decision options must be two distinct non-empty strings")]
    InvalidOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Base URL of a completions endpoint, or `mock` / `mock:exact`.
    pub endpoint: String,
    pub model_id: String,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub request_timeout_secs: f64,
    /// Maximum prompts per batch and in flight (B).
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_max_new_tokens() -> u32 {
    10
}

fn default_timeout() -> f64 {
    120.0
}

fn default_batch() -> usize {
    64
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "mock".to_string(),
            model_id: "mock".to_string(),
            max_new_tokens: default_max_new_tokens(),
            temperature: 0.0,
            request_timeout_secs: default_timeout(),
            batch_size: default_batch(),
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 {
            return Err("llm batch_size must be at least 1".into());
        }
        if self.request_timeout_secs.is_nan() || self.request_timeout_secs <= 0.0 {
            return Err("llm request_timeout_secs must be positive".into());
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err("llm temperature must be non-negative".into());
        }
        if self.max_new_tokens == 0 {
            return Err("llm max_new_tokens must be at least 1".into());
        }
        Ok(())
    }

    /// Backend described by this config.
    pub fn backend(&self) -> Arc<dyn LlmBackend> {
        match self.endpoint.as_str() {
            "mock" => Arc::new(MockLlm::with_policy(MockPolicy::FuzzyRatio)),
            "mock:exact" => Arc::new(MockLlm::with_policy(MockPolicy::ExactLabel)),
            url => Arc::new(HttpCompletion::new(url, self)),
        }
    }
}

/// Concept labels of the pair a prompt is about. Mock backends decide from
/// these instead of parsing prompts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairMeta {
    pub source_label: String,
    pub target_label: String,
}

impl PairMeta {
    pub fn new(source_label: impl Into<String>, target_label: impl Into<String>) -> Self {
        Self { source_label: source_label.into(), target_label: target_label.into() }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub max_tokens: u32,
    pub temperature: f64,
    pub logprobs: Option<u32>,
    pub meta: Option<&'a PairMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Token to log-probability map of the first generated position.
    pub top_logprobs: Option<Vec<(String, f64)>>,
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<Completion, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionLabel {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub label: DecisionLabel,
    /// Probability of the first option, renormalized over the two options.
    pub confidence: f64,
    /// The provider gave no usable log-probabilities; label came from the
    /// generated text and confidence is fixed at 0.5.
    #[serde(default)]
    pub fallback: bool,
}

pub struct LlmClient {
    backend: Arc<dyn LlmBackend>,
    cfg: LlmConfig,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn LlmBackend>, cfg: LlmConfig) -> Self {
        Self { backend, cfg }
    }

    pub fn from_config(cfg: LlmConfig) -> Self {
        Self { backend: cfg.backend(), cfg }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    pub fn complete(&self, prompt: &str, meta: Option<&PairMeta>) -> Result<String, LlmError> {
        let req = self.request(prompt, None, meta);
        Ok(self.backend.complete(&req)?.text)
    }

    /// Decides between two answers from the first generated token.
    ///
    /// The probability mass of each option's leading token (case-folded,
    /// summed over spelling variants among the reported top candidates) is
    /// renormalized over the two options. When neither appears, or the
    /// provider reports no log-probabilities, the generated text is mapped
    /// onto the options instead.
    pub fn binary_decision(
        &self,
        prompt: &str,
        options: (&str, &str),
        meta: Option<&PairMeta>,
    ) -> Result<Decision, LlmError> {
        let (pos, neg) = (leading_token(options.0), leading_token(options.1));
        if pos.is_empty() || neg.is_empty() || pos == neg {
            return Err(LlmError::InvalidOptions);
        }
        let req = self.request(prompt, Some(TOP_LOGPROBS), meta);
        let completion = match self.backend.complete(&req) {
            Err(LlmError::LogprobsUnsupported) => self.backend.complete(&self.request(prompt, None, meta))?,
            other => other?,
        };

        if let Some(top) = &completion.top_logprobs {
            let mass = |want: &str| -> f64 {
                top.iter().filter(|(tok, _)| leading_token(tok) == want).map(|(_, lp)| lp.exp()).sum()
            };
            let (p_pos, p_neg) = (mass(&pos), mass(&neg));
            if p_pos + p_neg > 0.0 {
                let confidence = (p_pos / (p_pos + p_neg)).clamp(0.0, 1.0);
                let label = if confidence >= 0.5 { DecisionLabel::Yes } else { DecisionLabel::No };
                return Ok(Decision { label, confidence, fallback: false });
            }
        }

        let mapper = LabelMapperConfig::for_options(options.0, options.1);
        let (label, _) = map_label(&completion.text, &mapper);
        let label = if label == mapper.labels[0] { DecisionLabel::Yes } else { DecisionLabel::No };
        Ok(Decision { label, confidence: 0.5, fallback: true })
    }

    /// Runs `binary_decision` over many prompts with at most `batch_size`
    /// (capped at [`MAX_IN_FLIGHT`]) requests in flight.
    pub fn decide_all(
        &self,
        items: &[(String, Option<PairMeta>)],
        options: (&str, &str),
    ) -> Vec<Result<Decision, LlmError>> {
        map_bounded(items, self.cfg.batch_size.min(MAX_IN_FLIGHT), |(prompt, meta)| {
            self.binary_decision(prompt, options, meta.as_ref())
        })
    }

    /// Runs `complete` over many prompts; concurrency as in
    /// [`decide_all`](Self::decide_all).
    pub fn complete_all(&self, items: &[(String, Option<PairMeta>)]) -> Vec<Result<String, LlmError>> {
        map_bounded(items, self.cfg.batch_size.min(MAX_IN_FLIGHT), |(prompt, meta)| {
            self.complete(prompt, meta.as_ref())
        })
    }

    fn request<'a>(&self, prompt: &'a str, logprobs: Option<u32>, meta: Option<&'a PairMeta>) -> CompletionRequest<'a> {
        CompletionRequest {
            prompt,
            max_tokens: self.cfg.max_new_tokens,
            temperature: self.cfg.temperature,
            logprobs,
            meta,
        }
    }
}

fn leading_token(s: &str) -> String {
    s.split(|c: char| !c.is_alphanumeric()).find(|t| !t.is_empty()).unwrap_or("").to_lowercase()
}
