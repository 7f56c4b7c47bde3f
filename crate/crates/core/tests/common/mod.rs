#![allow(dead_code)]

use std::path::PathBuf;

use wayfinder::llm::RetryPolicy;
use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, ScriptedBackend};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn graph(name: &str) -> KnowledgeGraph {
    KnowledgeGraph::load_path(fixture(&format!("{name}/graph.tsv"))).unwrap()
}

pub fn rules(name: &str) -> ScriptedBackend {
    ScriptedBackend::load(fixture(&format!("{name}/rules.json"))).unwrap()
}

pub fn gateway(name: &str) -> Gateway {
    Gateway::new(rules(name)).with_retry(RetryPolicy::no_delay())
}

pub fn depth(max_depth: usize) -> EngineConfig {
    EngineConfig {
        max_depth,
        ..EngineConfig::default()
    }
}

/// Sum of declared prompt and completion tokens over the named rules, one
/// entry per call.
pub fn declared_tokens(backend: &ScriptedBackend, calls: &[usize]) -> u64 {
    calls
        .iter()
        .map(|&i| backend.rules()[i].prompt_tokens + backend.rules()[i].completion_tokens)
        .sum()
}
pub mod literals;
pub mod oracle;
pub mod random_session;
