// Effect of the branching threshold on accuracy and cost over a small
// dataset.

use wayfinder::eval::{self, EvalOptions};
use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, Reasoner, ScriptedBackend};

fn fixture(rel: &str) -> String {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn main() {
    let graph = KnowledgeGraph::load_path(fixture("films/graph.tsv")).expect("graph");
    let dataset = eval::load_dataset_path(fixture("films/dataset.jsonl")).expect("dataset");
    let gateway = Gateway::new(ScriptedBackend::load(fixture("films/rules.json")).expect("rules"));

    println!(
        "{:>5} {:>6} {:>7} {:>8} {:>9}",
        "zeta", "Hits@1", "F1", "calls/q", "tokens/q"
    );
    for zeta in [0.4, 0.5, 0.6, 0.7] {
        let config = EngineConfig {
            max_depth: 2,
            threshold: zeta,
            ..EngineConfig::default()
        };
        let reasoner = Reasoner::new(&graph, config, gateway.clone());
        let report = eval::run_eval(&dataset, &reasoner, serde_json::Value::Null, &EvalOptions::default()).report;
        let a = report.aggregates;
        println!(
            "{zeta:>5} {:>6} {:>7} {:>8} {:>9}",
            a.hits_at_1, a.f1, a.mean_calls, a.mean_tokens
        );
    }
}
