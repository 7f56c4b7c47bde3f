//! Chat-completions HTTP backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{Backend, BackendError, CompletionRequest, CompletionResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4.1".into(),
            api_key: None,
            timeout_secs: 120,
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f32,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Fatal(format!("http client: {e}")))?;
        Ok(Self { config, client })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl Backend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [Message {
                role: "user",
                content: &request.rendered_text,
            }],
            temperature: 0.0,
        };
        let mut http = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            http = http.bearer_auth(key);
        }
        let response = http
            .send()
            .map_err(|e| BackendError::Transient(format!("request failed: {e}")))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let detail = response.text().unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {detail}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| BackendError::Fatal(format!("malformed completion body: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Fatal("completion has no message content".into()))?;
        let (prompt_tokens, completion_tokens) = match parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => {
                tracing::warn!(kind = %request.kind, "backend omitted token usage; counting 0");
                (0, 0)
            }
        };
        Ok(CompletionResult {
            text,
            prompt_tokens,
            completion_tokens,
        })
    }
}
