//! LLM provider clients: an OpenAI-compatible completions client and in-process
//! stubs for tests and dry runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("timed out")]
    Timeout,
    #[error("authentication failed")]
    Auth,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("bad response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Total tokens reported by the provider, if any.
    pub usage_tokens: Option<u64>,
}

#[async_trait]
pub trait LlmProvider: Send + Sync {
    async fn complete(&self, prompt: &str) -> Result<Completion, ProviderError>;
}

/// `POST {base_url}/v1/completions` with an optional bearer token read from
/// `auth_env` on every call.
pub struct HttpProvider {
    client: reqwest::Client,
    url: String,
    model: String,
    auth_env: Option<String>,
    max_tokens: u32,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("auth_env", &self.auth_env)
            .finish_non_exhaustive()
    }
}

impl HttpProvider {
    pub fn new(base_url: &str, model: &str, auth_env: Option<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            url: format!("{}/v1/completions", base_url.trim_end_matches('/')),
            model: model.to_string(),
            auth_env,
            max_tokens: 5,
        })
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    text: String,
}

#[derive(Deserialize)]
struct Usage {
    total_tokens: u64,
}

#[async_trait]
impl LlmProvider for HttpProvider {
    async fn complete(&self, prompt: &str) -> Result<Completion, ProviderError> {
        let mut req = self.client.post(&self.url).json(&json!({
            "model": self.model,
            "prompt": prompt,
            "max_tokens": self.max_tokens,
            "temperature": 0,
        }));
        if let Some(var) = &self.auth_env {
            let token = std::env::var(var).map_err(|_| ProviderError::Auth)?;
            req = req.bearer_auth(token);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.without_url().to_string())
            }
        })?;
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(ProviderError::Auth);
        }
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("status {status}")));
        }
        let body: CompletionBody = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::BadResponse(e.without_url().to_string())
            }
        })?;
        let text = body.choices.into_iter().next().ok_or_else(|| ProviderError::BadResponse("no choices".into()))?.text;
        Ok(Completion { text, usage_tokens: body.usage.map(|u| u.total_tokens) })
    }
}

/// Returns the same completion every time and counts calls.
#[derive(Debug, Default)]
pub struct FixedProvider {
    pub text: String,
    pub usage_tokens: Option<u64>,
    calls: AtomicUsize,
}

impl FixedProvider {
    pub fn new(text: impl Into<String>, usage_tokens: Option<u64>) -> Arc<Self> {
        Arc::new(Self { text: text.into(), usage_tokens, calls: AtomicUsize::new(0) })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl LlmProvider for FixedProvider {
    async fn complete(&self, _prompt: &str) -> Result<Completion, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(Completion { text: self.text.clone(), usage_tokens: self.usage_tokens })
    }
}

/// Never answers; the gateway's per-endpoint timeout fires instead.
#[derive(Debug, Default)]
pub struct HangingProvider {
    calls: AtomicUsize,
}

impl HangingProvider {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl LlmProvider for HangingProvider {
    async fn complete(&self, _prompt: &str) -> Result<Completion, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::future::pending().await
    }
}

/// Always rejects credentials.
#[derive(Debug, Default)]
pub struct AuthFailProvider;

#[async_trait]
impl LlmProvider for AuthFailProvider {
    async fn complete(&self, _prompt: &str) -> Result<Completion, ProviderError> {
        Err(ProviderError::Auth)
    }
}
