use std::collections::HashMap;

use super::{Completion, CompletionRequest, LlmBackend, LlmError, PairMeta};
use crate::encoder::normalize;
use crate::fuzzy::fuzzy_ratio;

/// Confidence used when no rule or policy applies.
pub const MOCK_DEFAULT_CONFIDENCE: f64 = 0.2;

/// How the mock scores a pair it has no explicit rule for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockPolicy {
    Constant(f64),
    /// `fuzzy_ratio` of the normalized labels.
    FuzzyRatio,
    /// 1.0 for equal normalized labels, 0.0 otherwise.
    ExactLabel,
}

/// Deterministic offline backend. Output is a pure function of the request.
///
/// For a pair confidence `c`, the completion text is `yes` when `c >= 0.5`
/// and `no` otherwise, and the first-position log-probabilities are
/// `ln c` for `yes` and `ln (1 - c)` for `no`.
#[derive(Debug, Clone)]
pub struct MockLlm {
    pub rules: HashMap<(String, String), f64>,
    pub canned: HashMap<String, String>,
    pub policy: MockPolicy,
    /// Report log-probabilities (disable to exercise the text fallback).
    pub logprobs: bool,
}

impl Default for MockLlm {
    fn default() -> Self {
        Self::with_policy(MockPolicy::Constant(MOCK_DEFAULT_CONFIDENCE))
    }
}

impl MockLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_policy(policy: MockPolicy) -> Self {
        Self { rules: HashMap::new(), canned: HashMap::new(), policy, logprobs: true }
    }

    pub fn rule(mut self, source_label: &str, target_label: &str, confidence: f64) -> Self {
        self.rules.insert((normalize(source_label), normalize(target_label)), confidence.clamp(0.0, 1.0));
        self
    }

    pub fn canned(mut self, prompt: &str, reply: &str) -> Self {
        self.canned.insert(prompt.to_string(), reply.to_string());
        self
    }

    pub fn confidence(&self, meta: Option<&PairMeta>) -> f64 {
        let Some(meta) = meta else {
            return MOCK_DEFAULT_CONFIDENCE;
        };
        let (s, t) = (normalize(&meta.source_label), normalize(&meta.target_label));
        if let Some(c) = self.rules.get(&(s.clone(), t.clone())) {
            return *c;
        }
        match self.policy {
            MockPolicy::Constant(c) => c,
            MockPolicy::FuzzyRatio => fuzzy_ratio(&s, &t),
            MockPolicy::ExactLabel => f64::from(u8::from(s == t)),
        }
    }
}

impl LlmBackend for MockLlm {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<Completion, LlmError> {
        if let Some(reply) = self.canned.get(req.prompt) {
            return Ok(Completion { text: reply.clone(), top_logprobs: None });
        }
        let c = self.confidence(req.meta);
        let text = if c >= 0.5 { "yes" } else { "no" }.to_string();
        let top_logprobs = (self.logprobs && req.logprobs.is_some()).then(|| {
            [("yes", c), ("no", 1.0 - c)]
                .into_iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(t, p)| (t.to_string(), p.ln()))
                .collect()
        });
        Ok(Completion { text, top_logprobs })
    }
}
