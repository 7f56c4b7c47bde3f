// How terminated trajectories turn into summaries and consolidated priors,
// and how priors carry over from one question to the next.

use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, Question, Reasoner, ScriptedBackend};

fn fixture(rel: &str) -> String {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn main() {
    let graph = KnowledgeGraph::load_path(fixture("taxonomy/graph.tsv")).expect("graph");
    let backend = ScriptedBackend::load(fixture("taxonomy/rules.json")).expect("rules");
    let config = EngineConfig {
        max_depth: 2,
        ..EngineConfig::default()
    };
    let reasoner = Reasoner::new(&graph, config, Gateway::new(backend));
    let question = Question::new("ada", "Where was Ada Lovelace's father born?", &["Ada Lovelace"]);

    let first = reasoner.answer(&question).expect("answer");
    println!("answer: {:?}", first.answer.entities);
    println!(
        "terminations: {} by depth, {} without expansion",
        first.stats.depth_terminations, first.stats.no_expand_terminations
    );
    for s in &first.priors.summaries {
        println!("  [{}] {}: {}", s.reason, s.source_sequence, s.text);
    }
    println!("priors v{}: {}", first.priors.version, first.priors.current());

    let second = reasoner
        .answer_with_priors(&question, first.priors.clone())
        .expect("answer");
    println!(
        "\nsecond run starts from v{} and ends at v{}",
        first.priors.version, second.priors.version
    );

    let path = std::env::temp_dir().join("wayfinder-example-priors.json");
    second.priors.save(&path).expect("priors save");
    println!("saved to {}", path.display());
}
