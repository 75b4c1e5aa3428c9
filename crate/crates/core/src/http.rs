//! Blocking JSON-over-HTTP transport shared by the embedding and completion
//! clients.

use std::time::Duration;

use serde_json::Value;

/// Environment variable holding the bearer token for remote endpoints.
pub const API_KEY_ENV: &str = "ONTOMATCH_API_KEY";

const RETRIES: u32 = 2;
const BACKOFF_BASE: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TransportError {
    Unreachable(String),
    Timeout,
    Status { code: u16, body: String },
    Decode(String),
}

pub(crate) struct JsonClient {
    agent: ureq::Agent,
    token: Option<String>,
}

impl JsonClient {
    pub(crate) fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let token = std::env::var(API_KEY_ENV).ok().filter(|t| !t.is_empty());
        Self { agent, token }
    }

    /// POSTs `body` and decodes the JSON reply. Transport failures and 5xx
    /// replies are retried with exponential backoff; 4xx replies are not.
    pub(crate) fn post(&self, url: &str, body: &Value) -> Result<Value, TransportError> {
        let mut attempt = 0;
        loop {
            let result = self.post_once(url, body);
            let transient = matches!(result, Err(TransportError::Unreachable(_) | TransportError::Timeout))
                || matches!(result, Err(TransportError::Status { code, .. }) if code >= 500);
            if !transient || attempt >= RETRIES {
                return result;
            }
            log::warn!("request to {url} failed ({result:?}), retrying");
            std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt));
            attempt += 1;
        }
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send_json(body).map_err(classify)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(classify)?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status { code: status, body: excerpt(&text) });
        }
        serde_json::from_str(&text).map_err(|e| TransportError::Decode(format!("{e}: {}", excerpt(&text))))
    }
}

fn classify(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::StatusCode(code) => TransportError::Status { code, body: String::new() },
        other => TransportError::Unreachable(other.to_string()),
    }
}

fn excerpt(text: &str) -> String {
    const MAX: usize = 300;
    if text.len() <= MAX {
        return text.to_string();
    }
    let mut end = MAX;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &text[..end])
}

/// Joins a base URL and an endpoint path unless the URL already ends with it.
pub(crate) fn endpoint_url(base: &str, path: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with(path) {
        base.to_string()
    } else {
        format!("{base}/{path}")
    }
}
