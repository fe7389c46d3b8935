//! HTTP clients for the external text and embedding backends.
//!
//! Both speak the common chat-completion / embedding JSON shapes, send at
//! temperature zero, and retry transient failures (network errors, 429, 5xx)
//! with exponential backoff. Endpoint, credentials, and model come from
//! environment variables; a missing endpoint selects the built-in fallbacks.

use std::thread;
use std::time::Duration;

use damast_core::metrics::{EmbeddingProvider, MetricsError};
use damast_core::narration::{GenerationPrompt, NarrationError, TextBackend};
use serde_json::{json, Value};

/// Environment variables for the chat backend.
pub const ENV_LLM_ENDPOINT: &str = "DAMAST_LLM_ENDPOINT";
pub const ENV_LLM_API_KEY: &str = "DAMAST_LLM_API_KEY";
pub const ENV_LLM_MODEL: &str = "DAMAST_LLM_MODEL";

/// Environment variables for the embedding backend.
pub const ENV_EMBED_ENDPOINT: &str = "DAMAST_EMBED_ENDPOINT";
pub const ENV_EMBED_API_KEY: &str = "DAMAST_EMBED_API_KEY";
pub const ENV_EMBED_MODEL: &str = "DAMAST_EMBED_MODEL";

const SYSTEM_PROMPT: &str = "You are a disaster damage analyst. Every statement must be \
                             grounded in the statistics block you are given; state every \
                             count verbatim and never invent numbers.";

/// Connection settings for an external HTTP backend.
#[derive(Debug, Clone)]
pub struct ExternalConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl ExternalConfig {
    fn defaults(endpoint: String, api_key: Option<String>, model: Option<String>) -> Self {
        Self {
            endpoint,
            api_key,
            model: model.unwrap_or_else(|| "default".to_string()),
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
        }
    }

    /// Chat backend config from `DAMAST_LLM_*`; `None` without an endpoint.
    pub fn chat_from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_LLM_ENDPOINT).ok()?;
        Some(Self::defaults(
            endpoint,
            std::env::var(ENV_LLM_API_KEY).ok(),
            std::env::var(ENV_LLM_MODEL).ok(),
        ))
    }

    /// Embedding backend config from `DAMAST_EMBED_*`; `None` without an
    /// endpoint.
    pub fn embedding_from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_EMBED_ENDPOINT).ok()?;
        Some(Self::defaults(
            endpoint,
            std::env::var(ENV_EMBED_API_KEY).ok(),
            std::env::var(ENV_EMBED_MODEL).ok(),
        ))
    }
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into()
}

fn retryable(error: &ureq::Error) -> bool {
    match error {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::HostNotFound => true,
        ureq::Error::ConnectionFailed => true,
        _ => false,
    }
}

/// POSTs `body` with bounded retries; returns the parsed JSON response.
fn post_json(config: &ExternalConfig, client: &ureq::Agent, body: &Value) -> Result<Value, String> {
    let mut backoff = config.initial_backoff;
    let mut last_error = String::new();
    for attempt in 0..config.attempts.max(1) {
        if attempt > 0 {
            thread::sleep(backoff);
            backoff *= 2;
        }
        let mut request = client.post(&config.endpoint);
        if let Some(key) = &config.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        match request.send_json(body) {
            Ok(mut response) => {
                return response
                    .body_mut()
                    .read_json::<Value>()
                    .map_err(|e| format!("invalid JSON response: {e}"));
            }
            Err(error) => {
                last_error = error.to_string();
                if !retryable(&error) {
                    return Err(last_error);
                }
            }
        }
    }
    Err(format!("{} attempts failed, last error: {last_error}", config.attempts.max(1)))
}

/// Chat-completion text backend.
pub struct ExternalChatBackend {
    config: ExternalConfig,
    client: ureq::Agent,
    name: String,
}

impl ExternalChatBackend {
    pub fn new(config: ExternalConfig) -> Self {
        let client = agent(config.timeout);
        let name = format!("external:{}", config.model);
        Self { config, client, name }
    }
}

impl TextBackend for ExternalChatBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, prompt: &GenerationPrompt) -> Result<String, NarrationError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": prompt.text()},
            ],
        });
        let response = post_json(&self.config, &self.client, &body).map_err(|message| {
            NarrationError::Backend { backend: self.name.clone(), message }
        })?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| NarrationError::Backend {
                backend: self.name.clone(),
                message: "response carries no message content".to_string(),
            })
    }
}

/// HTTP embedding provider returning fixed-dimension vectors.
pub struct ExternalEmbedding {
    config: ExternalConfig,
    client: ureq::Agent,
}

impl ExternalEmbedding {
    pub fn new(config: ExternalConfig) -> Self {
        let client = agent(config.timeout);
        Self { config, client }
    }
}

impl EmbeddingProvider for ExternalEmbedding {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        let body = json!({
            "model": self.config.model,
            "input": [text],
        });
        let response =
            post_json(&self.config, &self.client, &body).map_err(MetricsError::Provider)?;
        let values = response["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| MetricsError::Provider("response carries no embedding".to_string()))?;
        values
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| MetricsError::Provider("non-numeric embedding entry".to_string()))
            })
            .collect()
    }
}
