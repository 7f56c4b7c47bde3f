//! Prompt templates with `{placeholder}` markers.
//!
//! A placeholder is `{` followed by one or more `[a-z_]` characters and `}`.
//! Anything else in braces (example sets, JSON) is literal text. Rendering is
//! a single left-to-right pass, so substituted values are never re-scanned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("{kind} template: missing value for placeholder {{{field}}}")]
    Missing { kind: PromptKind, field: String },
    #[error("{kind} template: unexpected field {field:?}")]
    Unexpected { kind: PromptKind, field: String },
    #[error("{kind} template declares {found:?}, expected {expected:?}")]
    Placeholders {
        kind: PromptKind,
        expected: Vec<&'static str>,
        found: Vec<String>,
    },
    #[error("cannot read template {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    ContextGeneration,
    TrajectorySummary,
    PatternExtraction,
    CandidateRetrieval,
    Reranking,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::ContextGeneration,
        PromptKind::TrajectorySummary,
        PromptKind::PatternExtraction,
        PromptKind::CandidateRetrieval,
        PromptKind::Reranking,
    ];

    /// Placeholders the template for this kind must declare.
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            PromptKind::ContextGeneration => &["question", "relations_list"],
            PromptKind::TrajectorySummary => &["question", "explored_path", "reason_for_termination"],
            PromptKind::PatternExtraction => &["trajectory_summaries"],
            PromptKind::CandidateRetrieval => &["question", "context_narrative", "candidate_relations", "k"],
            PromptKind::Reranking => &[
                "question",
                "historical_path",
                "top_k_relations",
                "exploration_experience",
            ],
        }
    }

    /// File name inside a template directory.
    pub fn file_name(self) -> &'static str {
        match self {
            PromptKind::ContextGeneration => "context_generation.txt",
            PromptKind::TrajectorySummary => "trajectory_summary.txt",
            PromptKind::PatternExtraction => "pattern_extraction.txt",
            PromptKind::CandidateRetrieval => "candidate_retrieval.txt",
            PromptKind::Reranking => "reranking.txt",
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            PromptKind::ContextGeneration => include_str!("../../templates/context_generation.txt"),
            PromptKind::TrajectorySummary => include_str!("../../templates/trajectory_summary.txt"),
            PromptKind::PatternExtraction => include_str!("../../templates/pattern_extraction.txt"),
            PromptKind::CandidateRetrieval => include_str!("../../templates/candidate_retrieval.txt"),
            PromptKind::Reranking => include_str!("../../templates/reranking.txt"),
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Text(String),
    Field(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    kind: PromptKind,
    segments: Vec<Segment>,
}

impl Template {
    /// Parses `source` and checks that it declares exactly the placeholders
    /// of `kind`.
    pub fn parse(kind: PromptKind, source: &str) -> Result<Self, TemplateError> {
        let segments = split_placeholders(source);
        let found: BTreeSet<String> = segments
            .iter()
            .filter_map(|s| match s {
                Segment::Field(name) => Some(name.clone()),
                Segment::Text(_) => None,
            })
            .collect();
        let expected: BTreeSet<String> = kind.fields().iter().map(|s| s.to_string()).collect();
        if found != expected {
            return Err(TemplateError::Placeholders {
                kind,
                expected: kind.fields().to_vec(),
                found: found.into_iter().collect(),
            });
        }
        Ok(Self { kind, segments })
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn render(&self, fields: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        for name in fields.keys() {
            if !self.kind.fields().contains(name) {
                return Err(TemplateError::Unexpected {
                    kind: self.kind,
                    field: (*name).to_owned(),
                });
            }
        }
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Field(name) => match fields.get(name.as_str()) {
                    Some(value) => out.push_str(value),
                    None => {
                        return Err(TemplateError::Missing {
                            kind: self.kind,
                            field: name.clone(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

fn split_placeholders(source: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut rest = source;
    while let Some(open) = rest.find('{') {
        text.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if name_len > 0 && after[name_len..].starts_with('}') {
            if !text.is_empty() {
                segments.push(Segment::Text(std::mem::take(&mut text)));
            }
            segments.push(Segment::Field(after[..name_len].to_owned()));
            rest = &after[name_len + 1..];
        } else {
            text.push('{');
            rest = after;
        }
    }
    text.push_str(rest);
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    segments
}

/// One template per [`PromptKind`].
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<PromptKind, Template>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    /// Templates compiled into the crate.
    pub fn builtin() -> Self {
        let templates = PromptKind::ALL
            .iter()
            .map(|&k| (k, Template::parse(k, k.builtin()).expect("builtin template is valid")))
            .collect();
        Self { templates }
    }

    /// Loads templates from `dir`, falling back to the builtin text for any
    /// kind whose file is absent.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for kind in PromptKind::ALL {
            let path = dir.as_ref().join(kind.file_name());
            if !path.exists() {
                continue;
            }
            let source = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            set.templates.insert(kind, Template::parse(kind, &source)?);
        }
        Ok(set)
    }

    pub fn get(&self, kind: PromptKind) -> &Template {
        &self.templates[&kind]
    }

    pub fn render(&self, kind: PromptKind, fields: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        self.get(kind).render(fields)
    }
}

/// `{"a", "b"}`, the set notation the templates use for relation lists.
pub fn relation_set_literal<S: AsRef<str>>(relations: &[S]) -> String {
    let quoted: Vec<String> = relations.iter().map(|r| format!("\"{}\"", r.as_ref())).collect();
    format!("{{{}}}", quoted.join(", "))
}

/// One `- ` bullet per line.
pub fn bullet_list<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .map(|s| format!("- {}", s.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}
