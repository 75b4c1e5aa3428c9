mod common;

use std::sync::atomic::Ordering;

use common::StubServer;
use ontomatch::llm::{DecisionLabel, LlmClient, LlmConfig, LlmError};
use ontomatch::retrieval::{embed, EmbeddingProvider, HttpEmbedding, RetrievalError};
use serde_json::json;
use std::time::Duration;

fn llm(url: &str) -> LlmClient {
    LlmClient::from_config(LlmConfig {
        endpoint: url.to_string(),
        model_id: "test-model".into(),
        request_timeout_secs: 10.0,
        ..LlmConfig::default()
    })
}

#[test]
fn embedding_request_and_reply() {
    let stub = StubServer::start(|req, _| {
        let n = req.body["input"].as_array().map_or(0, Vec::len);
        // reply out of order to exercise index handling
        let data: Vec<_> = (0..n).rev().map(|i| json!({"index": i, "embedding": [i as f64 + 1.0, 1.0]})).collect();
        (200, json!({ "data": data }).to_string())
    });
    let provider = HttpEmbedding::new(&stub.url, "mini", Duration::from_secs(10));
    let texts: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let out = provider.embed_batch(&texts).unwrap();
    assert_eq!(out, vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 1.0]]);

    let seen = stub.seen.lock().unwrap();
    assert_eq!(seen[0].path, "/v1/embeddings");
    assert_eq!(seen[0].body, json!({"input": ["a", "b", "c"], "model": "mini"}));
}

#[test]
fn embeddings_are_batched_and_normalized() {
    let stub = StubServer::start(|req, _| {
        let n = req.body["input"].as_array().map_or(0, Vec::len);
        let data: Vec<_> = (0..n).map(|i| json!({"index": i, "embedding": [3.0, 4.0]})).collect();
        (200, json!({ "data": data }).to_string())
    });
    let provider = HttpEmbedding::new(&stub.url, "mini", Duration::from_secs(10));
    let texts: Vec<String> = (0..5).map(|i| format!("t{i}")).collect();
    let m = embed(&texts, &provider, 2).unwrap();
    assert_eq!(m.rows(), 5);
    assert_eq!(m.dense_row(4), vec![0.6, 0.8]);
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn short_embedding_reply_is_an_error() {
    let stub = StubServer::start(|_, _| (200, json!({"data": [{"index": 0, "embedding": [1.0]}]}).to_string()));
    let provider = HttpEmbedding::new(&stub.url, "mini", Duration::from_secs(10));
    let err = provider.embed_batch(&["a".into(), "b".into()]).unwrap_err();
    assert!(matches!(err, RetrievalError::ProviderError(_)), "{err:?}");
}

#[test]
fn completion_wire_format_and_logprobs() {
    let stub = StubServer::start(|_, _| {
        let reply = json!({"choices": [{"text": " Yes", "logprobs": {"top_logprobs": [{" Yes": -0.2, "yes": -2.0, " No": -1.9}]}}]});
        (200, reply.to_string())
    });
    let client = llm(&stub.url);
    let d = client.binary_decision("Q?", ("yes", "no"), None).unwrap();
    let (y, n) = ((-0.2f64).exp() + (-2.0f64).exp(), (-1.9f64).exp());
    assert_eq!(d.label, DecisionLabel::Yes);
    assert!((d.confidence - y / (y + n)).abs() < 1e-12);
    assert!(!d.fallback);

    let seen = stub.seen.lock().unwrap();
    assert_eq!(seen[0].path, "/v1/completions");
    let body = &seen[0].body;
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["prompt"], "Q?");
    assert_eq!(body["max_tokens"], 10);
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["logprobs"], 20);
}

#[test]
fn no_logprobs_falls_back_to_text() {
    let stub = StubServer::start(|_, _| {
        (200, json!({"choices": [{"text": "No, they differ.", "logprobs": null}]}).to_string())
    });
    let d = llm(&stub.url).binary_decision("Q?", ("yes", "no"), None).unwrap();
    assert_eq!(d.label, DecisionLabel::No);
    assert_eq!(d.confidence, 0.5);
    assert!(d.fallback);
}

#[test]
fn server_errors_are_retried() {
    let stub = StubServer::start(|_, n| {
        if n < 2 {
            (503, "{\"error\": \"busy\"}".into())
        } else {
            (200, json!({"choices": [{"text": "yes"}]}).to_string())
        }
    });
    assert_eq!(llm(&stub.url).complete("p", None).unwrap(), "yes");
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded() {
    let stub = StubServer::start(|_, _| (500, "{}".into()));
    let err = llm(&stub.url).complete("p", None).unwrap_err();
    assert!(matches!(err, LlmError::ProviderError(ref m) if m.contains("500")), "{err:?}");
    assert_eq!(stub.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = StubServer::start(|_, _| (400, "{\"error\": \"bad prompt\"}".into()));
    let err = llm(&stub.url).complete("p", None).unwrap_err();
    assert!(matches!(err, LlmError::ProviderError(ref m) if m.contains("400") && m.contains("bad prompt")), "{err:?}");
    assert_eq!(stub.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = llm(&format!("http://127.0.0.1:{port}/v1")).complete("p", None).unwrap_err();
    assert!(matches!(err, LlmError::EndpointUnreachable(_)), "{err:?}");
}
