// One question answered end to end against a scripted backend, with the
// budget ledger and the JSON-lines trace.

use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, Question, Reasoner, ScriptedBackend};

fn fixture(rel: &str) -> String {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn main() {
    let graph = KnowledgeGraph::load_path(fixture("titanic/graph.tsv")).expect("graph");
    let backend = ScriptedBackend::load(fixture("titanic/rules.json")).expect("rules");
    let config = EngineConfig {
        max_depth: 2,
        ..EngineConfig::default()
    };
    let reasoner = Reasoner::new(&graph, config, Gateway::new(backend));

    let question = Question::new(
        "titanic",
        "Where was the director of the movie Titanic born?",
        &["Titanic"],
    );
    let outcome = reasoner.answer(&question).expect("topic is in the graph");

    let best = outcome.answer.best_path.as_ref().expect("a path was found");
    println!("answer: {:?}", outcome.answer.entities);
    println!("path:   {} (score {})", best.sequence, outcome.answer.score);
    println!(
        "ledger: {} calls, {} prompt + {} completion tokens",
        outcome.ledger.llm_calls, outcome.ledger.prompt_tokens, outcome.ledger.completion_tokens
    );
    for (kind, calls) in &outcome.ledger.calls_by_kind {
        println!("  {kind}: {calls}");
    }
    println!("priors v{}: {}", outcome.priors.version, outcome.priors.current());
    println!("\ntrace:");
    print!("{}", outcome.trace_jsonl());
}
