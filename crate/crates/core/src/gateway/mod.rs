//! Text generation behind one interface: a deterministic mock backend and an
//! HTTP chat-completion backend, both wrapped with caching, bounded retry,
//! and gateway-wide rate limiting.

mod cache;
mod limiter;
mod mock;
#[cfg(feature = "remote")]
mod remote;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::GenerationSettings;
use crate::error::GatewayError;

pub use cache::{CacheEntry, ResponseCache};
pub use limiter::RateLimiter;
pub use mock::MockBackend;
#[cfg(feature = "remote")]
pub use remote::{parse_chat_response, ChatCompletionBackend, API_KEY_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeakerKind {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub kind: SpeakerKind,
    pub text: String,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Message {
            kind: SpeakerKind::System,
            text: text.into(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Message {
            kind: SpeakerKind::User,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub messages: Vec<Message>,
    pub settings: GenerationSettings,
}

impl GenerationRequest {
    pub fn new(messages: Vec<Message>, settings: GenerationSettings) -> Result<Self, GatewayError> {
        let req = GenerationRequest { messages, settings };
        req.check()?;
        Ok(req)
    }

    pub fn check(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("no messages".into()));
        }
        if let Some(i) = self.messages.iter().position(|m| m.text.trim().is_empty()) {
            return Err(GatewayError::InvalidRequest(format!("message {i} is empty")));
        }
        Ok(())
    }

    /// Concatenated user-message text.
    pub fn user_text(&self) -> String {
        self.messages
            .iter()
            .filter(|m| m.kind == SpeakerKind::User)
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
}

/// Hex SHA-256 over the canonical JSON form of the request. Message order and
/// every generation setting participate in the key.
pub fn cache_key(req: &GenerationRequest) -> String {
    let canonical = serde_json::json!({
        "messages": req
            .messages
            .iter()
            .map(|m| [serde_json::to_value(m.kind).unwrap(), m.text.clone().into()])
            .collect::<Vec<_>>(),
        "temperature": req.settings.temperature,
        "max_tokens": req.settings.max_tokens,
        "seed": req.settings.seed,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Failure reported by a backend for a single attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendFailure {
    Transport(String),
    RateLimited { retry_after: Option<Duration> },
    Malformed(String),
    Rejected { status: u16, body: String },
}

impl BackendFailure {
    fn retryable(&self) -> bool {
        match self {
            BackendFailure::Transport(_) | BackendFailure::RateLimited { .. } => true,
            BackendFailure::Rejected { status, .. } => *status >= 500,
            BackendFailure::Malformed(_) => false,
        }
    }
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, req: &GenerationRequest) -> Result<String, BackendFailure>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            initial_delay_ms: 500,
            max_delay_ms: 20_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Backoff before attempt `attempt + 1`, for `attempt >= 1`.
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(attempt.saturating_sub(1) as i32);
        let ms = (self.initial_delay_ms as f64 * factor).min(self.max_delay_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub cache: bool,
    pub cache_dir: Option<std::path::PathBuf>,
    pub retry: RetryPolicy,
    pub max_concurrency: usize,
    pub requests_per_minute: Option<u32>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            cache: true,
            cache_dir: None,
            retry: RetryPolicy::default(),
            max_concurrency: 4,
            requests_per_minute: None,
        }
    }
}

pub struct Gateway {
    backend: Box<dyn Backend>,
    cache: ResponseCache,
    retry: RetryPolicy,
    limiter: RateLimiter,
    sleep: fn(Duration),
    backend_calls: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, config: &GatewayConfig) -> Self {
        Gateway {
            backend,
            cache: ResponseCache::new(config.cache, config.cache_dir.clone()),
            retry: config.retry.clone(),
            limiter: RateLimiter::new(config.max_concurrency, config.requests_per_minute),
            sleep: std::thread::sleep,
            backend_calls: AtomicU64::new(0),
        }
    }

    /// Mock backend with in-memory caching and no throttling.
    pub fn mock() -> Self {
        Gateway::new(Box::new(MockBackend::new()), &GatewayConfig::default())
    }

    /// Replaces the function used to wait between retries.
    pub fn with_sleeper(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    /// Number of calls that reached the backend (cache misses times attempts).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    pub fn max_concurrency(&self) -> usize {
        self.limiter.max_concurrency()
    }

    pub fn generate(&self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        req.check()?;
        let backend_id = self.backend.id().to_string();
        if !self.cache.enabled() {
            let text = self.call_with_retry(req)?;
            return Ok(GenerationResponse {
                text,
                backend_id,
                cached: false,
            });
        }
        let key = cache_key(req);
        let slot = self.cache.slot(&key);
        let _guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(text) = self.cache.get(&key, &backend_id)? {
            return Ok(GenerationResponse {
                text,
                backend_id,
                cached: true,
            });
        }
        let text = self.call_with_retry(req)?;
        self.cache.put(&key, &backend_id, &text)?;
        Ok(GenerationResponse {
            text,
            backend_id,
            cached: false,
        })
    }

    fn call_with_retry(&self, req: &GenerationRequest) -> Result<String, GatewayError> {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.limiter.acquire();
                self.backend_calls.fetch_add(1, Ordering::Relaxed);
                self.backend.complete(req)
            };
            let failure = match outcome {
                Ok(text) if text.trim().is_empty() => {
                    return Err(GatewayError::Malformed("empty completion".into()))
                }
                Ok(text) => return Ok(text),
                Err(f) => f,
            };
            if !failure.retryable() || attempt >= max_attempts {
                return Err(match failure {
                    BackendFailure::Transport(message) => GatewayError::Transport {
                        attempts: attempt,
                        message,
                    },
                    BackendFailure::RateLimited { .. } => {
                        GatewayError::RateLimited { attempts: attempt }
                    }
                    BackendFailure::Malformed(m) => GatewayError::Malformed(m),
                    BackendFailure::Rejected { status, body } => {
                        GatewayError::Rejected { status, body }
                    }
                });
            }
            let mut delay = self.retry.delay_after(attempt);
            if let BackendFailure::RateLimited {
                retry_after: Some(hint),
            } = failure
            {
                delay = delay.max(hint.min(Duration::from_millis(self.retry.max_delay_ms)));
            }
            log::debug!("{} attempt {attempt} failed, retrying in {delay:?}", self.backend.id());
            (self.sleep)(delay);
        }
    }
}
