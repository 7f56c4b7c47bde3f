//! Run configuration: defaults, then a JSON config file, then environment
//! variables, then command-line flags. The merged result is echoed into
//! every report and trace.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{Backend, Gateway, LiveBackend, LiveConfig, RetryPolicy, ScriptedBackend, TemplateSet};
use crate::trajectory::EngineConfig;

pub const ENV_API_KEY: &str = "WAYFINDER_API_KEY";
pub const ENV_BASE_URL: &str = "WAYFINDER_BASE_URL";
pub const ENV_MODEL: &str = "WAYFINDER_MODEL";
pub const ENV_BACKEND: &str = "WAYFINDER_BACKEND";
pub const ENV_SCRIPTED_RULES: &str = "WAYFINDER_SCRIPTED_RULES";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {reason}")]
    File { path: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("backend: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    #[default]
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// k = 3
    Webqsp,
    /// k = 4
    Cwq,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub backend: BackendKind,
    pub scripted_rules: Option<PathBuf>,
    pub live: LiveConfig,
    pub retry: RetryPolicy,
    pub templates_dir: Option<PathBuf>,
}

/// Values given explicitly on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub k: Option<usize>,
    pub depth: Option<usize>,
    pub iterations: Option<usize>,
    pub threshold: Option<f64>,
    pub hops: Option<usize>,
    pub backend: Option<BackendKind>,
    pub scripted_rules: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub model: Option<String>,
    pub base_url: Option<String>,
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let err = |reason: String| ConfigError::File {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    /// Layers in environment variables read through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(key) = lookup(ENV_API_KEY).filter(|k| !k.is_empty()) {
            self.live.api_key = Some(key);
        }
        if let Some(url) = lookup(ENV_BASE_URL) {
            self.live.base_url = url;
        }
        if let Some(model) = lookup(ENV_MODEL) {
            self.live.model = model;
        }
        if let Some(kind) = lookup(ENV_BACKEND) {
            self.backend = match kind.as_str() {
                "live" => BackendKind::Live,
                "scripted" => BackendKind::Scripted,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "{ENV_BACKEND}={other} is not live|scripted"
                    )))
                }
            };
        }
        if let Some(rules) = lookup(ENV_SCRIPTED_RULES) {
            self.scripted_rules = Some(rules.into());
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        match o.preset {
            Some(Preset::Webqsp) => self.engine.candidates_k = 3,
            Some(Preset::Cwq) => self.engine.candidates_k = 4,
            None => {}
        }
        let e = &mut self.engine;
        if let Some(k) = o.k {
            e.candidates_k = k;
        }
        if let Some(d) = o.depth {
            e.max_depth = d;
        }
        if let Some(i) = o.iterations {
            e.max_iterations = i;
        }
        if let Some(t) = o.threshold {
            e.threshold = t;
        }
        if let Some(h) = o.hops {
            e.subgraph_hops = h;
        }
        if let Some(b) = o.backend {
            self.backend = b;
        }
        if let Some(r) = &o.scripted_rules {
            self.scripted_rules = Some(r.clone());
        }
        if let Some(t) = &o.templates_dir {
            self.templates_dir = Some(t.clone());
        }
        if let Some(m) = &o.model {
            self.live.model = m.clone();
        }
        if let Some(u) = &o.base_url {
            self.live.base_url = u.clone();
        }
    }

    /// Full precedence chain: flags > env > file > defaults.
    pub fn resolve(
        file: Option<&Path>,
        lookup: impl Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply_env(lookup)?;
        cfg.apply_overrides(overrides);
        cfg.engine.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    /// JSON echo of the effective configuration. The API key is never
    /// included.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn build_backend(&self) -> Result<Box<dyn Backend>, ConfigError> {
        match self.backend {
            BackendKind::Scripted => {
                let path = self
                    .scripted_rules
                    .as_ref()
                    .ok_or_else(|| ConfigError::Invalid("scripted backend needs a rules file".into()))?;
                let backend = ScriptedBackend::load(path)
                    .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
                Ok(Box::new(backend))
            }
            BackendKind::Live => {
                if self.live.api_key.is_none() {
                    tracing::warn!("{ENV_API_KEY} is not set; sending requests without authorization");
                }
                let backend = LiveBackend::new(self.live.clone()).map_err(|e| ConfigError::Backend(e.to_string()))?;
                Ok(Box::new(backend))
            }
        }
    }

    pub fn build_gateway(&self) -> Result<Gateway, ConfigError> {
        let backend: std::sync::Arc<dyn Backend> = self.build_backend()?.into();
        let mut gateway = Gateway::from_arc(backend).with_retry(self.retry.clone());
        if let Some(dir) = &self.templates_dir {
            let templates = TemplateSet::from_dir(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            gateway = gateway.with_templates(templates);
        }
        Ok(gateway)
    }
}
