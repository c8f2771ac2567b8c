//! Chat-completion clients.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use arena_core::trace::Usage;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatParams {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub repetition_penalty: f64,
    pub presence_penalty: f64,
}

impl Default for ChatParams {
    fn default() -> Self {
        ChatParams {
            max_new_tokens: 6144,
            temperature: 0.1,
            top_p: 0.8,
            top_k: 20,
            repetition_penalty: 1.1,
            presence_penalty: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub usage: Usage,
    /// Attempts that failed before this reply arrived.
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Timeout,
    Network,
    Status(u16),
    Decode,
    /// No response is available, e.g. a mock without a canned answer.
    Unavailable,
}

impl ErrorCategory {
    pub fn is_retryable(self) -> bool {
        match self {
            ErrorCategory::Timeout | ErrorCategory::Network => true,
            ErrorCategory::Status(code) => code == 429 || code >= 500,
            ErrorCategory::Decode | ErrorCategory::Unavailable => false,
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorCategory::Timeout => f.write_str("timeout"),
            ErrorCategory::Network => f.write_str("network"),
            ErrorCategory::Status(c) => write!(f, "http {c}"),
            ErrorCategory::Decode => f.write_str("decode"),
            ErrorCategory::Unavailable => f.write_str("unavailable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{category}: {message}")]
pub struct BackendError {
    pub category: ErrorCategory,
    pub message: String,
}

impl BackendError {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        BackendError {
            category,
            message: message.into(),
        }
    }
}

/// A model endpoint. Implementations are shared between concurrently
/// running matches.
pub trait ChatBackend: Send + Sync {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError>;
}

/// Rough token count for backends that do not report usage.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << attempt.min(10)))
    }
}

/// Retries retryable failures of the inner backend with exponential backoff.
pub struct Retrying<B> {
    inner: B,
    policy: RetryPolicy,
    retry_events: AtomicU64,
}

impl<B: ChatBackend> Retrying<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Retrying {
            inner,
            policy,
            retry_events: AtomicU64::new(0),
        }
    }

    /// Total retries issued so far.
    pub fn retry_events(&self) -> u64 {
        self.retry_events.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ChatBackend> ChatBackend for Retrying<B> {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        let mut attempt = 0;
        loop {
            match self.inner.chat(prompt, params) {
                Ok(mut reply) => {
                    reply.retries += attempt;
                    return Ok(reply);
                }
                Err(e) if e.category.is_retryable() && attempt < self.policy.max_retries => {
                    self.retry_events.fetch_add(1, Ordering::Relaxed);
                    tracing::warn!(attempt = attempt + 1, error = %e, "chat request failed, retrying");
                    std::thread::sleep(self.policy.delay(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full chat-completions URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset means no auth.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_key_env() -> String {
    "ARENA_API_KEY".into()
}

fn default_timeout() -> u64 {
    120
}

/// Single-attempt client for the common chat-completions JSON shape. Wrap it
/// in [`Retrying`] for retries.
pub struct HttpBackend {
    config: HttpConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let token = std::env::var(&config.api_key_env).ok().filter(|t| !t.is_empty());
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        HttpBackend {
            config,
            token,
            agent,
        }
    }

    pub fn request_body(&self, prompt: &str, params: &ChatParams) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": params.max_new_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "top_k": params.top_k,
            "repetition_penalty": params.repetition_penalty,
            "presence_penalty": params.presence_penalty,
        })
    }
}

fn classify(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Status(code, resp) => {
            let body = resp.into_string().unwrap_or_default();
            BackendError::new(ErrorCategory::Status(code), body)
        }
        ureq::Error::Transport(t) => {
            let msg = t.to_string();
            let timed_out = matches!(t.kind(), ureq::ErrorKind::Io)
                && (msg.contains("timed out") || msg.contains("timeout"));
            let category = if timed_out {
                ErrorCategory::Timeout
            } else {
                ErrorCategory::Network
            };
            BackendError::new(category, msg)
        }
    }
}

/// Assistant text and usage from a chat-completions response body.
pub fn parse_completion(body: &Value, prompt: &str) -> Result<ChatReply, BackendError> {
    let text = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::new(ErrorCategory::Decode, "response has no choices[0].message.content"))?
        .to_string();
    let usage = Usage {
        tokens_in: body
            .pointer("/usage/prompt_tokens")
            .and_then(Value::as_u64)
            .unwrap_or_else(|| estimate_tokens(prompt)),
        tokens_out: body
            .pointer("/usage/completion_tokens")
            .and_then(Value::as_u64)
            .unwrap_or_else(|| estimate_tokens(&text)),
    };
    Ok(ChatReply {
        text,
        usage,
        retries: 0,
    })
}

impl ChatBackend for HttpBackend {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(token) = &self.token {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
        let resp = req
            .send_json(self.request_body(prompt, params))
            .map_err(classify)?;
        let body: Value = resp
            .into_json()
            .map_err(|e| BackendError::new(ErrorCategory::Decode, e.to_string()))?;
        parse_completion(&body, prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canned {
    pub prompt_hash: String,
    pub text: String,
    #[serde(default)]
    pub tokens_in: Option<u64>,
    #[serde(default)]
    pub tokens_out: Option<u64>,
}

/// Replays canned answers keyed by the SHA-256 of the prompt. Prompts without
/// an entry go to the fallback, if any.
#[derive(Default)]
pub struct MockBackend {
    canned: HashMap<String, Canned>,
    fallback: Option<Box<dyn ChatBackend>>,
}

impl MockBackend {
    pub fn new() -> Self {
        MockBackend::default()
    }

    pub fn with_fallback(mut self, fallback: impl ChatBackend + 'static) -> Self {
        self.fallback = Some(Box::new(fallback));
        self
    }

    pub fn insert(&mut self, prompt: &str, text: impl Into<String>) {
        let entry = Canned {
            prompt_hash: prompt_hash(prompt),
            text: text.into(),
            tokens_in: None,
            tokens_out: None,
        };
        self.canned.insert(entry.prompt_hash.clone(), entry);
    }

    pub fn insert_canned(&mut self, entry: Canned) {
        self.canned.insert(entry.prompt_hash.clone(), entry);
    }

    /// Load `Canned` records, one JSON object per line.
    pub fn load(path: &Path) -> std::io::Result<MockBackend> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut mock = MockBackend::new();
        for line in file.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Canned = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            mock.insert_canned(entry);
        }
        Ok(mock)
    }

    pub fn len(&self) -> usize {
        self.canned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canned.is_empty()
    }
}

impl ChatBackend for MockBackend {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        let hash = prompt_hash(prompt);
        match self.canned.get(&hash) {
            Some(c) => Ok(ChatReply {
                usage: Usage {
                    tokens_in: c.tokens_in.unwrap_or_else(|| estimate_tokens(prompt)),
                    tokens_out: c.tokens_out.unwrap_or_else(|| estimate_tokens(&c.text)),
                },
                text: c.text.clone(),
                retries: 0,
            }),
            None => match &self.fallback {
                Some(f) => f.chat(prompt, params),
                None => Err(BackendError::new(
                    ErrorCategory::Unavailable,
                    format!("no canned response for prompt {hash}"),
                )),
            },
        }
    }
}

/// Always fails; stands in for an unreachable server.
pub struct OfflineBackend;

impl ChatBackend for OfflineBackend {
    fn chat(&self, _prompt: &str, _params: &ChatParams) -> Result<ChatReply, BackendError> {
        Err(BackendError::new(ErrorCategory::Network, "backend is offline"))
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        (**self).chat(prompt, params)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        (**self).chat(prompt, params)
    }
}
