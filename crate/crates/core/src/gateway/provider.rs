use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::embedding::{Embedder, Embedding};
use super::GatewayError;
use crate::types::ToolTag;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub decoding: Decoding,
    pub tool_tag: ToolTag,
    pub timeout: Duration,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("prompt is empty".into()));
        }
        if self.decoding.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest(
                "max_output_tokens must be positive".into(),
            ));
        }
        if self.decoding.temperature.is_nan() || self.decoding.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(
                "temperature must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Provider text plus the number of transport attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderReply {
    pub text: String,
    pub attempts: u32,
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<ProviderReply, GatewayError>;
}

/// One queued scripted outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Text(String),
    /// Simulated transport failure, written as `{"error": "..."}` in scripts.
    Failure {
        error: String,
    },
}

/// Test provider that replays per-tool queues of canned completions.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    queues: Mutex<BTreeMap<ToolTag, VecDeque<ScriptEntry>>>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_script(script: BTreeMap<ToolTag, Vec<ScriptEntry>>) -> Self {
        let queues = script
            .into_iter()
            .map(|(tag, entries)| (tag, entries.into_iter().collect()))
            .collect();
        Self {
            queues: Mutex::new(queues),
        }
    }

    pub fn push(&self, tag: ToolTag, text: impl Into<String>) -> &Self {
        self.push_entry(tag, ScriptEntry::Text(text.into()))
    }

    pub fn push_failure(&self, tag: ToolTag, error: impl Into<String>) -> &Self {
        self.push_entry(
            tag,
            ScriptEntry::Failure {
                error: error.into(),
            },
        )
    }

    pub fn push_entry(&self, tag: ToolTag, entry: ScriptEntry) -> &Self {
        self.queues
            .lock()
            .unwrap()
            .entry(tag)
            .or_default()
            .push_back(entry);
        self
    }

    pub fn remaining(&self, tag: ToolTag) -> usize {
        self.queues
            .lock()
            .unwrap()
            .get(&tag)
            .map_or(0, VecDeque::len)
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<ProviderReply, GatewayError> {
        let next = self
            .queues
            .lock()
            .unwrap()
            .get_mut(&request.tool_tag)
            .and_then(VecDeque::pop_front);
        match next {
            Some(ScriptEntry::Text(text)) => Ok(ProviderReply { text, attempts: 1 }),
            Some(ScriptEntry::Failure { error }) => Err(GatewayError::Transport {
                attempts: 1,
                message: error,
            }),
            None => Err(GatewayError::ScriptUnderflow {
                tool: request.tool_tag,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    /// Connection failures, timeouts, 429 and 5xx are worth retrying.
    pub retriable: bool,
}

/// Minimal JSON-over-HTTP POST, abstracted so retries can be tested
/// without a network.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError>;
}

/// Blocking reqwest transport. Callers inside an async runtime must run it
/// on a blocking thread.
#[derive(Debug, Default)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| TransportError {
            message: e.to_string(),
            retriable: true,
        })?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(TransportError {
                message: format!("HTTP {status}: {text}"),
                retriable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        resp.json::<Value>().map_err(|e| TransportError {
            message: format!("invalid JSON body: {e}"),
            retriable: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_backoff_ms: 250,
        }
    }
}

impl RetryPolicy {
    /// Runs `attempt` up to `max_retries + 1` times with exponential backoff
    /// between retriable failures. Returns the value and the attempt count.
    pub fn run<T>(
        &self,
        mut attempt: impl FnMut() -> Result<T, TransportError>,
    ) -> Result<(T, u32), GatewayError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match attempt() {
                Ok(v) => return Ok((v, attempts)),
                Err(e) if e.retriable && attempts <= self.max_retries => {
                    let delay = self.base_backoff_ms.saturating_mul(1 << (attempts - 1));
                    tracing::warn!(attempts, delay_ms = delay, error = %e.message, "retrying provider call");
                    if delay > 0 {
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
                Err(e) => {
                    return Err(GatewayError::Transport {
                        attempts,
                        message: e.message,
                    })
                }
            }
        }
    }
}

/// Connection settings shared by the wire chat and embedding clients.
#[derive(Debug, Clone)]
pub struct WireEndpoint {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl WireEndpoint {
    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Chat-completion client speaking the common `messages` in / `choices` out
/// JSON shape.
pub struct WireProvider {
    endpoint: WireEndpoint,
    transport: Box<dyn Transport>,
    retry: RetryPolicy,
}

impl WireProvider {
    pub fn new(endpoint: WireEndpoint, transport: Box<dyn Transport>, retry: RetryPolicy) -> Self {
        Self {
            endpoint,
            transport,
            retry,
        }
    }
}

impl ChatProvider for WireProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<ProviderReply, GatewayError> {
        request.validate()?;
        let body = json!({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_output_tokens,
            "stream": false,
        });
        let url = self.endpoint.url("chat/completions");
        let (value, attempts) = self.retry.run(|| {
            self.transport.post_json(
                &url,
                self.endpoint.api_key.as_deref(),
                &body,
                request.timeout,
            )
        })?;
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                GatewayError::Protocol("response has no choices[0].message.content".into())
            })?;
        Ok(ProviderReply {
            text: text.to_string(),
            attempts,
        })
    }
}

/// Embedding client for the common `/embeddings` endpoint shape.
pub struct WireEmbedder {
    endpoint: WireEndpoint,
    transport: Box<dyn Transport>,
    retry: RetryPolicy,
    dim: usize,
    timeout: Duration,
}

impl WireEmbedder {
    pub fn new(
        endpoint: WireEndpoint,
        transport: Box<dyn Transport>,
        retry: RetryPolicy,
        dim: usize,
        timeout: Duration,
    ) -> Self {
        Self {
            endpoint,
            transport,
            retry,
            dim,
            timeout,
        }
    }
}

impl Embedder for WireEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        let body = json!({"model": self.endpoint.model, "input": text});
        let url = self.endpoint.url("embeddings");
        let (value, _) = self.retry.run(|| {
            self.transport
                .post_json(&url, self.endpoint.api_key.as_deref(), &body, self.timeout)
        })?;
        let raw: Vec<f32> = value
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Protocol("response has no data[0].embedding".into()))?
            .iter()
            .map(|v| v.as_f64().map(|f| f as f32))
            .collect::<Option<_>>()
            .ok_or_else(|| GatewayError::Protocol("embedding has non-numeric entries".into()))?;
        if raw.len() != self.dim {
            return Err(GatewayError::Embedding(format!(
                "expected dim {}, provider returned {}",
                self.dim,
                raw.len()
            )));
        }
        Embedding::normalized(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::Arc;

    fn request(tag: ToolTag) -> CompletionRequest {
        CompletionRequest {
            prompt: "hello".into(),
            decoding: Decoding {
                temperature: 0.0,
                max_output_tokens: 16,
            },
            tool_tag: tag,
            timeout: Duration::from_secs(1),
        }
    }

    #[test]
    fn scripted_queue_order() {
        let p = ScriptedProvider::new();
        p.push(ToolTag::Teach, "T1").push(ToolTag::Teach, "T2");
        assert_eq!(p.complete(&request(ToolTag::Teach)).unwrap().text, "T1");
        assert_eq!(p.complete(&request(ToolTag::Teach)).unwrap().text, "T2");
    }

    #[test]
    fn scripted_underflow_names_tag() {
        let p = ScriptedProvider::new();
        let err = p.complete(&request(ToolTag::Quiz)).unwrap_err();
        assert_eq!(
            err,
            GatewayError::ScriptUnderflow {
                tool: ToolTag::Quiz
            }
        );
        assert!(err.to_string().contains("quiz"));
    }

    #[test]
    fn script_entries_parse_from_json() {
        let entries: Vec<ScriptEntry> =
            serde_json::from_str(r#"["ok", {"error": "boom"}]"#).unwrap();
        assert_eq!(entries[0], ScriptEntry::Text("ok".into()));
        assert_eq!(
            entries[1],
            ScriptEntry::Failure {
                error: "boom".into()
            }
        );
    }

    /// Counts attempts and always fails as if the endpoint were unreachable.
    struct Unreachable(Arc<AtomicU32>);

    impl Transport for Unreachable {
        fn post_json(
            &self,
            _: &str,
            _: Option<&str>,
            _: &Value,
            _: Duration,
        ) -> Result<Value, TransportError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(TransportError {
                message: "connection refused".into(),
                retriable: true,
            })
        }
    }

    /// Fails a fixed number of times, then answers.
    struct Flaky {
        failures_left: AtomicU32,
        seen: Mutex<Vec<Value>>,
    }

    impl Transport for Flaky {
        fn post_json(
            &self,
            url: &str,
            bearer: Option<&str>,
            body: &Value,
            _: Duration,
        ) -> Result<Value, TransportError> {
            assert_eq!(url, "http://llm.local/v1/chat/completions");
            assert_eq!(bearer, Some("secret"));
            self.seen.lock().unwrap().push(body.clone());
            if self.failures_left.load(Ordering::SeqCst) > 0 {
                self.failures_left.fetch_sub(1, Ordering::SeqCst);
                return Err(TransportError {
                    message: "503".into(),
                    retriable: true,
                });
            }
            Ok(json!({"choices": [{"message": {"role": "assistant", "content": "hi there"}}]}))
        }
    }

    fn endpoint() -> WireEndpoint {
        WireEndpoint {
            base_url: "http://llm.local/v1/".into(),
            model: "m".into(),
            api_key: Some("secret".into()),
        }
    }

    #[test]
    fn retry_budget_two_means_three_attempts() {
        let count = Arc::new(AtomicU32::new(0));
        let p = WireProvider::new(
            endpoint(),
            Box::new(Unreachable(count.clone())),
            RetryPolicy {
                max_retries: 2,
                base_backoff_ms: 0,
            },
        );
        let err = p.complete(&request(ToolTag::Teach)).unwrap_err();
        assert_eq!(count.load(Ordering::SeqCst), 3);
        assert!(matches!(err, GatewayError::Transport { attempts: 3, .. }));
    }

    #[test]
    fn non_retriable_fails_fast() {
        struct BadRequest(Arc<AtomicU32>);
        impl Transport for BadRequest {
            fn post_json(
                &self,
                _: &str,
                _: Option<&str>,
                _: &Value,
                _: Duration,
            ) -> Result<Value, TransportError> {
                self.0.fetch_add(1, Ordering::SeqCst);
                Err(TransportError {
                    message: "HTTP 400".into(),
                    retriable: false,
                })
            }
        }
        let count = Arc::new(AtomicU32::new(0));
        let p = WireProvider::new(
            endpoint(),
            Box::new(BadRequest(count.clone())),
            RetryPolicy::default(),
        );
        assert!(p.complete(&request(ToolTag::Teach)).is_err());
        assert_eq!(count.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn wire_body_shape_and_recovery() {
        let flaky = Flaky {
            failures_left: AtomicU32::new(1),
            seen: Mutex::new(Vec::new()),
        };
        let p = WireProvider::new(
            endpoint(),
            Box::new(flaky),
            RetryPolicy {
                max_retries: 2,
                base_backoff_ms: 0,
            },
        );
        let reply = p.complete(&request(ToolTag::Answer)).unwrap();
        assert_eq!(reply.text, "hi there");
        assert_eq!(reply.attempts, 2);
    }

    #[test]
    fn invalid_requests_rejected() {
        let p = WireProvider::new(
            endpoint(),
            Box::new(Unreachable(Arc::new(AtomicU32::new(0)))),
            RetryPolicy::default(),
        );
        let mut r = request(ToolTag::Teach);
        r.prompt = "  ".into();
        assert!(matches!(
            p.complete(&r),
            Err(GatewayError::InvalidRequest(_))
        ));
        let mut r = request(ToolTag::Teach);
        r.decoding.max_output_tokens = 0;
        assert!(matches!(
            p.complete(&r),
            Err(GatewayError::InvalidRequest(_))
        ));
    }

    #[test]
    fn wire_embedder_normalizes_and_checks_dim() {
        struct Fixed;
        impl Transport for Fixed {
            fn post_json(
                &self,
                url: &str,
                _: Option<&str>,
                body: &Value,
                _: Duration,
            ) -> Result<Value, TransportError> {
                assert!(url.ends_with("/embeddings"));
                assert_eq!(body["input"], "text");
                Ok(json!({"data": [{"embedding": [3.0, 4.0]}]}))
            }
        }
        let e = WireEmbedder::new(
            endpoint(),
            Box::new(Fixed),
            RetryPolicy::default(),
            2,
            Duration::from_secs(1),
        );
        let v = e.embed("text").unwrap();
        assert!((v.values()[0] - 0.6).abs() < 1e-6);
        let e3 = WireEmbedder::new(
            endpoint(),
            Box::new(Fixed),
            RetryPolicy::default(),
            3,
            Duration::from_secs(1),
        );
        assert!(matches!(e3.embed("text"), Err(GatewayError::Embedding(_))));
    }
}
