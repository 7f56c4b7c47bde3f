// Rendering the five prompt templates and pulling structured answers out of
// chatty model replies.

use std::collections::BTreeMap;

use wayfinder::llm::prompt::relation_set_literal;
use wayfinder::llm::{parse_relation_list, parse_score_map};
use wayfinder::{PromptKind, TemplateSet};

fn main() {
    let templates = TemplateSet::builtin();
    for kind in PromptKind::ALL {
        println!("{kind}: placeholders {:?}", kind.fields());
    }

    let candidates = ["person.place_of_birth", "person.nationality", "person.spouse"];
    let fields = BTreeMap::from([
        (
            "question",
            "Where was the director of the movie Titanic born?".to_owned(),
        ),
        ("historical_path", "movie.directed_by".to_owned()),
        ("top_k_relations", relation_set_literal(&candidates)),
        (
            "exploration_experience",
            "Nationality is too coarse for birthplace questions.".to_owned(),
        ),
    ]);
    let prompt = templates
        .render(PromptKind::Reranking, &fields)
        .expect("all fields supplied");
    let task = prompt.rsplit("Your Task:").next().unwrap_or_default();
    println!("\nreranking task section:{task}");

    let reply = "Here you go:\n['person.place_of_birth', \"person.spouse\", 'film.sequel']\nHope that helps.";
    println!(
        "relation list -> {:?}",
        parse_relation_list(reply, &candidates, 2).unwrap()
    );

    let reply = "Scores {approx}: {'person.place_of_birth': 0.9, \"person.nationality\": 1.7, 'film.sequel': 0.4}";
    println!("score map -> {:?}", parse_score_map(reply, &candidates).unwrap());
}
