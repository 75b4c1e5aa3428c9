use std::time::Duration;

use serde_json::{json, Value};

use super::{Completion, CompletionRequest, LlmBackend, LlmConfig, LlmError};
use crate::http::{endpoint_url, JsonClient, TransportError};

/// Client for a text-completion endpoint returning `choices[0].text` and
/// `choices[0].logprobs.top_logprobs[0]`.
pub struct HttpCompletion {
    url: String,
    model: String,
    client: JsonClient,
}

impl HttpCompletion {
    pub fn new(endpoint: &str, cfg: &LlmConfig) -> Self {
        Self {
            url: endpoint_url(endpoint, "completions"),
            model: cfg.model_id.clone(),
            client: JsonClient::new(Duration::from_secs_f64(cfg.request_timeout_secs)),
        }
    }
}

impl LlmBackend for HttpCompletion {
    fn complete(&self, req: &CompletionRequest<'_>) -> Result<Completion, LlmError> {
        let mut body = json!({
            "model": self.model,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        });
        if let Some(n) = req.logprobs {
            body["logprobs"] = json!(n);
        }
        let reply = self.client.post(&self.url, &body).map_err(|e| match e {
            TransportError::Unreachable(m) => LlmError::EndpointUnreachable(m),
            TransportError::Timeout => LlmError::Timeout,
            TransportError::Status { code, body } => LlmError::ProviderError(format!("HTTP {code}: {body}")),
            TransportError::Decode(m) => LlmError::ProviderError(m),
        })?;
        decode_completion(&reply)
    }
}

pub(crate) fn decode_completion(reply: &Value) -> Result<Completion, LlmError> {
    let choice = reply
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::ProviderError("response has no choices".into()))?;
    let text = choice
        .get("text")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::ProviderError("choice has no text".into()))?
        .to_string();
    let top_logprobs = choice
        .get("logprobs")
        .and_then(|l| l.get("top_logprobs"))
        .and_then(|t| t.get(0))
        .and_then(Value::as_object)
        .map(|m| m.iter().filter_map(|(tok, lp)| lp.as_f64().map(|v| (tok.clone(), v))).collect::<Vec<_>>());
    Ok(Completion { text, top_logprobs })
}
