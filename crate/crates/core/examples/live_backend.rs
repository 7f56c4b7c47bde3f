// Answering a question through a chat-completions endpoint. Needs
// WAYFINDER_API_KEY; WAYFINDER_BASE_URL and WAYFINDER_MODEL are optional.

use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, LiveBackend, LiveConfig, Question, Reasoner};

fn main() {
    let Some(key) = std::env::var("WAYFINDER_API_KEY").ok().filter(|k| !k.is_empty()) else {
        println!("WAYFINDER_API_KEY is not set; skipping the live example");
        return;
    };
    let mut live = LiveConfig {
        api_key: Some(key),
        ..LiveConfig::default()
    };
    if let Ok(url) = std::env::var("WAYFINDER_BASE_URL") {
        live.base_url = url;
    }
    if let Ok(model) = std::env::var("WAYFINDER_MODEL") {
        live.model = model;
    }
    println!("model {} at {}", live.model, live.base_url);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/titanic/graph.tsv");
    let graph = KnowledgeGraph::load_path(path).expect("graph");
    let backend = LiveBackend::new(live).expect("http client");
    let reasoner = Reasoner::new(&graph, EngineConfig::default(), Gateway::new(backend));
    let question = Question::new(
        "live",
        "Where was the director of the movie Titanic born?",
        &["Titanic"],
    );
    match reasoner.answer(&question) {
        Ok(out) => {
            println!("answer: {:?} (score {:.3})", out.answer.entities, out.answer.score);
            println!("calls: {}, tokens: {}", out.ledger.llm_calls, out.ledger.total_tokens);
            println!("priors: {}", out.priors.current());
        }
        Err(e) => eprintln!("error: {e}"),
    }
}
