use std::time::Duration;

use serde_json::{json, Value};

use super::{Backend, BackendFailure, GenerationRequest, SpeakerKind};
use crate::error::GatewayError;

/// Environment variable holding the bearer credential for the remote backend.
pub const API_KEY_ENV: &str = "VERIDEBATE_API_KEY";

/// Chat-completion client speaking the common `POST .../chat/completions`
/// JSON protocol.
pub struct ChatCompletionBackend {
    id: String,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ChatCompletionBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        let model = model.into();
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        ChatCompletionBackend {
            id: format!("remote:{model}"),
            endpoint: endpoint.into(),
            model,
            api_key,
            agent,
        }
    }

    /// Reads the credential from `VERIDEBATE_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>, model: impl Into<String>) -> Result<Self, GatewayError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| GatewayError::Config(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(endpoint, model, Some(key), Duration::from_secs(120)))
    }

    pub fn request_body(&self, req: &GenerationRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let role = match m.kind {
                    SpeakerKind::System => "system",
                    SpeakerKind::User => "user",
                };
                json!({ "role": role, "content": m.text })
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": req.settings.temperature,
            "max_tokens": req.settings.max_tokens,
            "seed": req.settings.seed,
        })
    }
}

/// Extracts `choices[0].message.content` from a chat-completion body.
pub fn parse_chat_response(body: &str) -> Result<String, BackendFailure> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| BackendFailure::Malformed(format!("not JSON: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendFailure::Malformed("missing choices[0].message.content".into()))?;
    if text.trim().is_empty() {
        return Err(BackendFailure::Malformed("empty content".into()));
    }
    Ok(text.to_string())
}

impl Backend for ChatCompletionBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, req: &GenerationRequest) -> Result<String, BackendFailure> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(self.request_body(req))
            .map_err(|e| BackendFailure::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|h| h.to_str().ok())
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendFailure::Transport(e.to_string()))?;
        match status {
            200..=299 => parse_chat_response(&body),
            429 => Err(BackendFailure::RateLimited { retry_after }),
            _ => Err(BackendFailure::Rejected { status, body }),
        }
    }
}
