// Seeded sampling and evaluation of a question set, with the plain-text
// table and JSON report the CLI writes.

use wayfinder::eval::{self, EvalOptions, HitsMode};
use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, Reasoner, ScriptedBackend};

fn fixture(rel: &str) -> String {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn main() {
    let graph = KnowledgeGraph::load_path(fixture("films/graph.tsv")).expect("graph");
    let all = eval::load_dataset_path(fixture("films/dataset.jsonl")).expect("dataset");
    let sample = eval::sample(&all, 6, 7);
    println!("sampled {:?}", sample.iter().map(|e| e.id.as_str()).collect::<Vec<_>>());

    let gateway = Gateway::new(ScriptedBackend::load(fixture("films/rules.json")).expect("rules"));
    let config = EngineConfig {
        max_depth: 2,
        ..EngineConfig::default()
    };
    let reasoner = Reasoner::new(&graph, config.clone(), gateway);
    for mode in [HitsMode::Strict, HitsMode::Any] {
        let options = EvalOptions {
            hits_mode: mode,
            parallel: 2,
            priors: None,
        };
        let outcome = eval::run_eval(&sample, &reasoner, serde_json::to_value(&config).unwrap(), &options);
        println!("\n{mode:?} Hits@1:");
        print!("{}", outcome.report.to_table());
    }
}
