// Loading a triple file, walking relations and cutting a hop-bounded
// subgraph around a topic entity.

use wayfinder::{EntityFrontier, KnowledgeGraph};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/titanic/graph.tsv");
    let graph = KnowledgeGraph::load_path(path).expect("fixture graph loads");
    println!(
        "{} triples, {} entities, {} relations",
        graph.triples().len(),
        graph.entities().len(),
        graph.relations().len()
    );

    let start = EntityFrontier::single("Titanic");
    println!("relations out of Titanic: {:?}", graph.outgoing_relations(&start));

    let cast = graph.traverse(&start, "film.starring").expect("Titanic has a cast");
    println!("film.starring -> {cast}");
    let births = graph
        .traverse(&cast, "person.place_of_birth")
        .expect("cast members have birthplaces");
    println!("  person.place_of_birth -> {births}");

    for hops in 1..=3 {
        let sub = graph.extract_subgraph(&["Titanic"], hops).expect("topic is present");
        println!("{hops}-hop subgraph: {} triples", sub.triples().len());
    }
}
