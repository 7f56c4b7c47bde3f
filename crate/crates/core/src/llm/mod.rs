//! LLM access: prompt rendering, backends, output parsing and per-question
//! budget accounting.

pub mod backend;
pub mod live;
pub mod parse;
pub mod prompt;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{Backend, BackendError, CompletionRequest, CompletionResult, ScriptedBackend, ScriptedRule};
pub use live::{LiveBackend, LiveConfig};
pub use parse::{parse_relation_list, parse_score_map, ParseError};
pub use prompt::{PromptKind, Template, TemplateError, TemplateSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("backend unavailable after {attempts} attempts: {last}")]
    Unavailable { attempts: u32, last: String },
    #[error(transparent)]
    Backend(BackendError),
}

/// LLM calls and tokens charged to one question.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub question_id: String,
    pub llm_calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
    /// Successful calls per prompt kind.
    pub calls_by_kind: BTreeMap<PromptKind, u64>,
}

impl BudgetLedger {
    pub fn new(question_id: impl Into<String>) -> Self {
        Self {
            question_id: question_id.into(),
            ..Self::default()
        }
    }

    pub fn charge(&mut self, kind: PromptKind, result: &CompletionResult) {
        self.llm_calls += 1;
        self.prompt_tokens += result.prompt_tokens;
        self.completion_tokens += result.completion_tokens;
        self.total_tokens += result.prompt_tokens + result.completion_tokens;
        *self.calls_by_kind.entry(kind).or_default() += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        Self {
            initial_backoff_ms: 0,
            max_backoff_ms: 0,
            ..Self::default()
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(retry as i32);
        Duration::from_millis(ms.min(self.max_backoff_ms as f64) as u64)
    }
}

/// Renders prompts, sends them to a backend with retries, and charges each
/// successful completion to a ledger.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn Backend>,
    templates: Arc<TemplateSet>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(backend: impl Backend + 'static) -> Self {
        Self {
            backend: Arc::new(backend),
            templates: Arc::new(TemplateSet::builtin()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn from_arc(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            templates: Arc::new(TemplateSet::builtin()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = Arc::new(templates);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn render(
        &self,
        kind: PromptKind,
        fields: &BTreeMap<&str, String>,
    ) -> Result<CompletionRequest, TemplateError> {
        Ok(CompletionRequest::new(kind, self.templates.render(kind, fields)?))
    }

    /// Transient failures are retried with exponential backoff; only the
    /// final successful attempt is charged.
    pub fn complete(
        &self,
        request: &CompletionRequest,
        ledger: &mut BudgetLedger,
    ) -> Result<CompletionResult, GatewayError> {
        let mut attempt = 0;
        loop {
            match self.backend.complete(request) {
                Ok(result) => {
                    ledger.charge(request.kind, &result);
                    return Ok(result);
                }
                Err(BackendError::Transient(reason)) => {
                    if attempt >= self.retry.max_retries {
                        return Err(GatewayError::Unavailable {
                            attempts: attempt + 1,
                            last: reason,
                        });
                    }
                    tracing::debug!(kind = %request.kind, attempt, %reason, "retrying completion");
                    std::thread::sleep(self.retry.backoff(attempt));
                    attempt += 1;
                }
                Err(other) => return Err(GatewayError::Backend(other)),
            }
        }
    }

    pub fn ask(
        &self,
        kind: PromptKind,
        fields: &BTreeMap<&str, String>,
        ledger: &mut BudgetLedger,
    ) -> Result<CompletionResult, GatewayError> {
        let request = self.render(kind, fields)?;
        self.complete(&request, ledger)
    }
}
