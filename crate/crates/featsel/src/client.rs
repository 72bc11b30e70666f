//! Completion transports.

use std::env;
use std::time::Duration;

use featsel_core::llm::{CompletionRequest, CompletionResponse};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const ENV_ENDPOINT: &str = "FEATSEL_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "FEATSEL_LLM_MODEL";
pub const ENV_API_KEY: &str = "FEATSEL_LLM_API_KEY";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClientError {
    /// Worth retrying: timeouts, 429, 5xx, empty answers.
    Transient(String),
    /// Retrying cannot help.
    Fatal(String),
    /// A replay transcript has no entry for this prompt.
    NotRecorded(String),
}

impl std::fmt::Display for ClientError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClientError::Transient(m) => write!(f, "transient: {m}"),
            ClientError::Fatal(m) => write!(f, "{m}"),
            ClientError::NotRecorded(h) => write!(f, "no recorded completion for prompt hash {h}"),
        }
    }
}

impl std::error::Error for ClientError {}

/// Anything that turns a chat prompt into assistant text.
pub trait CompletionClient: Send + Sync {
    fn model_id(&self) -> &str;
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        (**self).complete(req)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for Box<C> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        (**self).complete(req)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for std::sync::Arc<C> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        (**self).complete(req)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpConfig {
    /// Full URL of a chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpConfig {
    /// Reads `FEATSEL_LLM_ENDPOINT`, `FEATSEL_LLM_MODEL` and the optional
    /// `FEATSEL_LLM_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let var = |k: &str| env::var(k).ok().map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let endpoint = var(ENV_ENDPOINT).ok_or_else(|| Error::Config(format!("{ENV_ENDPOINT} is not set")))?;
        let model = var(ENV_MODEL).ok_or_else(|| Error::Config(format!("{ENV_MODEL} is not set")))?;
        Ok(HttpConfig {
            endpoint,
            model,
            api_key: var(ENV_API_KEY),
            timeout: Duration::from_secs(120),
        })
    }
}

/// Chat-completions client: system and user messages in, the first
/// choice's message content out.
pub struct HttpChatClient {
    cfg: HttpConfig,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(cfg: HttpConfig) -> Result<Self> {
        if !(cfg.endpoint.starts_with("http://") || cfg.endpoint.starts_with("https://")) {
            return Err(Error::Config(format!("endpoint `{}` is not an http(s) URL", cfg.endpoint)));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpChatClient { cfg, agent })
    }

    pub fn from_env() -> Result<Self> {
        Self::new(HttpConfig::from_env()?)
    }
}

impl CompletionClient for HttpChatClient {
    fn model_id(&self) -> &str {
        &self.cfg.model
    }

    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut call = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send_json(&body).map_err(|e| ClientError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            408 | 429 | 500..=599 => return Err(ClientError::Transient(format!("http {status}: {}", clip(&text)))),
            _ => return Err(ClientError::Fatal(format!("http {status}: {}", clip(&text)))),
        }
        parse_chat_response(&text)
    }
}

fn clip(s: &str) -> &str {
    match s.char_indices().nth(300) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub(crate) fn parse_chat_response(text: &str) -> Result<CompletionResponse, ClientError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ClientError::Transient(format!("malformed body: {e}")))?;
    let choice = &v["choices"][0];
    let content = choice["message"]["content"].as_str().unwrap_or_default();
    if content.trim().is_empty() {
        return Err(ClientError::Transient("empty completion".into()));
    }
    Ok(CompletionResponse {
        text: content.to_string(),
        finished: choice["finish_reason"].as_str() != Some("length"),
    })
}
