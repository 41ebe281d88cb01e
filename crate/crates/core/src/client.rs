//! Provider-agnostic chat-completion client used for extraction and
//! summary generation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

/// Environment variable holding the API key. Never read from config files.
pub const API_KEY_ENV: &str = "DISCO_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    /// Decoding options passed through verbatim (temperature, max_tokens, ...).
    #[serde(default)]
    pub options: Map<String, Value>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("missing API key (set {API_KEY_ENV})")]
    MissingKey,
}

pub trait ChatClient: Send + Sync {
    /// Model label recorded in caches and summary records.
    fn model(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError>;
}

/// Bounded retries with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Runs `op` until it succeeds or the attempts are exhausted; returns the
    /// last error otherwise. The delay doubles after every failed attempt.
    pub fn run<T, E: std::fmt::Display>(&self, mut op: impl FnMut(u32) -> Result<T, E>) -> Result<T, E> {
        let attempts = self.attempts.max(1);
        let mut delay = self.base_delay;
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= attempts => return Err(e),
                Err(e) => {
                    log::debug!("attempt {attempt}/{attempts} failed: {e}");
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub options: Map<String, Value>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-5-mini".into(),
            options: Map::new(),
            timeout_secs: default_timeout_secs(),
        }
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
pub struct HttpChatClient {
    config: ClientConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn from_env(config: ClientConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| ClientError::MissingKey)?;
        Ok(Self::new(config, api_key))
    }

    pub fn new(config: ClientConfig, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self {
            config,
            api_key,
            agent,
        }
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

pub fn request_body(model: &str, request: &ChatRequest, defaults: &Map<String, Value>) -> Value {
    let mut body = Map::new();
    body.insert("model".into(), json!(model));
    body.insert(
        "messages".into(),
        json!([
            {"role": "system", "content": request.system},
            {"role": "user", "content": request.user},
        ]),
    );
    for (k, v) in defaults.iter().chain(request.options.iter()) {
        body.insert(k.clone(), v.clone());
    }
    Value::Object(body)
}

pub fn response_text(body: &Value) -> Result<String, ClientError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ClientError::Malformed("no choices[0].message.content".into()))
}

impl ChatClient for HttpChatClient {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let body = request_body(&self.config.model, request, &self.config.options);
        let mut response = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) => ClientError::Status(code),
                other => ClientError::Transport(other.to_string()),
            })?;
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ClientError::Malformed(e.to_string()))?;
        response_text(&value)
    }
}

type Responder = dyn Fn(&ChatRequest, usize) -> Result<String, ClientError> + Send + Sync;

/// In-process client driven by a closure; counts calls.
pub struct MockClient {
    model: String,
    responder: Box<Responder>,
    calls: AtomicUsize,
}

impl MockClient {
    /// `responder` receives the request and the zero-based global call index.
    pub fn new(
        model: impl Into<String>,
        responder: impl Fn(&ChatRequest, usize) -> Result<String, ClientError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            model: model.into(),
            responder: Box::new(responder),
            calls: AtomicUsize::new(0),
        }
    }

    /// Always answers with `text`.
    pub fn fixed(model: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(model, move |_, _| Ok(text.clone()))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatClient for MockClient {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        (self.responder)(request, n)
    }
}
