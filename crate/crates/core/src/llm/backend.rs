use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::PromptKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletionRequest {
    pub kind: PromptKind,
    pub rendered_text: String,
}

impl CompletionRequest {
    pub fn new(kind: PromptKind, rendered_text: impl Into<String>) -> Self {
        Self {
            kind,
            rendered_text: rendered_text.into(),
        }
    }

    /// Short stable hash of the rendered prompt, for error messages.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.rendered_text.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    /// Worth retrying: connection failures, 5xx, 429.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
    #[error("no scripted rule matches {kind} request (fingerprint {fingerprint})")]
    Unmatched { kind: PromptKind, fingerprint: String },
}

/// Something that turns a rendered prompt into text. Implementations must be
/// shareable across evaluation workers.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRule {
    pub kind: PromptKind,
    #[serde(default)]
    pub contains: Vec<String>,
    pub response: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

impl ScriptedRule {
    pub fn new(kind: PromptKind, contains: &[&str], response: impl Into<String>) -> Self {
        Self {
            kind,
            contains: contains.iter().map(|s| s.to_string()).collect(),
            response: response.into(),
            prompt_tokens: 0,
            completion_tokens: 0,
        }
    }

    pub fn tokens(mut self, prompt: u64, completion: u64) -> Self {
        self.prompt_tokens = prompt;
        self.completion_tokens = completion;
        self
    }

    fn matches(&self, request: &CompletionRequest) -> bool {
        self.kind == request.kind && self.contains.iter().all(|s| request.rendered_text.contains(s.as_str()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RulesFile {
    rules: Vec<ScriptedRule>,
}

/// Deterministic backend: the first rule whose kind matches and whose
/// substrings all occur in the prompt answers it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedBackend {
    rules: Vec<ScriptedRule>,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptedRule>) -> Self {
        Self { rules }
    }

    pub fn push(&mut self, rule: ScriptedRule) -> &mut Self {
        self.rules.push(rule);
        self
    }

    pub fn rules(&self) -> &[ScriptedRule] {
        &self.rules
    }

    /// Reads `{"rules": [...]}` or a bare rule array.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        if text.trim_start().starts_with('[') {
            return Ok(Self::new(serde_json::from_str(text)?));
        }
        let file: RulesFile = serde_json::from_str(text)?;
        Ok(Self::new(file.rules))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Fatal(format!("cannot read rules {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| BackendError::Fatal(format!("invalid rules {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RulesFile {
            rules: self.rules.clone(),
        })
        .expect("rules serialize")
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        self.rules
            .iter()
            .find(|r| r.matches(request))
            .map(|r| CompletionResult {
                text: r.response.clone(),
                prompt_tokens: r.prompt_tokens,
                completion_tokens: r.completion_tokens,
            })
            .ok_or_else(|| BackendError::Unmatched {
                kind: request.kind,
                fingerprint: request.fingerprint(),
            })
    }
}
