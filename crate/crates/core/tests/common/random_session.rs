//! Random graphs paired with scripted backends that score every relation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wayfinder::llm::{PromptKind, RetryPolicy};
use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, ScriptedBackend, ScriptedRule, Triple};

pub struct RandomCase {
    pub graph: KnowledgeGraph,
    pub gateway: Gateway,
    pub config: EngineConfig,
    pub topic: String,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> RandomCase {
    let entities = rng.random_range(2..12);
    let relations = rng.random_range(1..6);
    let edges = rng.random_range(1..30);
    let triples: Vec<Triple> = (0..edges)
        .map(|_| {
            Triple::new(
                format!("e{}", rng.random_range(0..entities)),
                format!("rel.r{}", rng.random_range(0..relations)),
                format!("e{}", rng.random_range(0..entities)),
            )
        })
        .collect();
    let graph = KnowledgeGraph::from_triples(triples);
    let topic = graph.triples().iter().next().unwrap().subject.clone();

    let mut names: Vec<String> = (0..relations).map(|r| format!("rel.r{r}")).collect();
    names.shuffle(rng);
    let scores: BTreeMap<&str, f64> = names
        .iter()
        .map(|n| (n.as_str(), f64::from(rng.random_range(0..=10u32)) / 10.0))
        .collect();
    let backend = ScriptedBackend::new(vec![
        ScriptedRule::new(PromptKind::ContextGeneration, &[], "Keep following the path.").tokens(30, 5),
        ScriptedRule::new(
            PromptKind::CandidateRetrieval,
            &[],
            serde_json::to_string(&names).unwrap(),
        )
        .tokens(40, 8),
        ScriptedRule::new(PromptKind::Reranking, &[], serde_json::to_string(&scores).unwrap()).tokens(50, 9),
        ScriptedRule::new(PromptKind::TrajectorySummary, &[], "It stopped.").tokens(20, 3),
        ScriptedRule::new(PromptKind::PatternExtraction, &[], "Stops happen.").tokens(25, 2),
    ]);
    let config = EngineConfig {
        max_depth: rng.random_range(1..5),
        candidates_k: rng.random_range(1..5),
        max_iterations: rng.random_range(0..15),
        threshold: f64::from(rng.random_range(0..=10u32)) / 10.0,
        ..EngineConfig::default()
    };
    RandomCase {
        graph,
        gateway: Gateway::new(backend).with_retry(RetryPolicy::no_delay()),
        config,
        topic,
    }
}
