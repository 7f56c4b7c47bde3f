//! Seeded generators for model-style outputs with known ground truth.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 8] = [
    "movie.directed_by",
    "person.place_of_birth",
    "person.nationality",
    "person.spouse",
    "film.starring",
    "location.contained_by",
    "music.group_member.instruments_played",
    "people.person.sibling_s",
];

const OOV: [&str; 3] = ["made.up_relation", "film.sequel", "person.height_m"];

const PROSE: [&str; 8] = [
    "Sure, here is my answer.",
    "Based on the question, the most relevant relations are:",
    "I considered the context carefully [see notes].",
    "Output:",
    "Let me think about this {briefly}.",
    "These should lead toward the answer.",
    "",
    "Note: scores reflect relevance (0 to 1).",
];

pub struct ListCase {
    pub text: String,
    pub allowed: Vec<String>,
    pub k: usize,
    pub expected: Vec<String>,
}

pub struct MapCase {
    pub text: String,
    pub candidates: Vec<String>,
    pub expected: BTreeMap<String, f64>,
}

fn quote(rng: &mut ChaCha8Rng, s: &str) -> String {
    if rng.random_bool(0.5) {
        format!("'{s}'")
    } else {
        format!("\"{s}\"")
    }
}

fn wrap(rng: &mut ChaCha8Rng, literal: &str) -> String {
    let before = *PROSE.choose(rng).unwrap();
    let after = *PROSE.choose(rng).unwrap();
    let sep = if rng.random_bool(0.5) { "\n" } else { " " };
    format!("{before}{sep}{literal}{sep}{after}")
}

fn allowed(rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = rng.random_range(1..=VOCAB.len());
    let mut v: Vec<String> = VOCAB.choose_multiple(rng, n).map(|s| s.to_string()).collect();
    v.sort();
    v
}

pub fn list_case(rng: &mut ChaCha8Rng) -> ListCase {
    let allowed = allowed(rng);
    let k = rng.random_range(1..=4);
    let mut items: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(1..6) {
        if rng.random_bool(0.25) {
            items.push(OOV.choose(rng).unwrap().to_string());
        } else {
            items.push(allowed.choose(rng).unwrap().clone());
        }
    }
    let mut expected = Vec::new();
    for item in &items {
        if expected.len() < k && allowed.contains(item) && !expected.contains(item) {
            expected.push(item.clone());
        }
    }
    let quoted: Vec<String> = items.iter().map(|i| quote(rng, i)).collect();
    let sep = if rng.random_bool(0.5) { ", " } else { "," };
    let trailing = if rng.random_bool(0.2) { "," } else { "" };
    let literal = format!("[{}{trailing}]", quoted.join(sep));
    ListCase {
        text: wrap(rng, &literal),
        allowed,
        k,
        expected,
    }
}

pub fn map_case(rng: &mut ChaCha8Rng) -> MapCase {
    let candidates = allowed(rng);
    let mut expected: BTreeMap<String, f64> = candidates.iter().map(|c| (c.clone(), 0.0)).collect();
    let mut entries = Vec::new();
    for c in &candidates {
        if rng.random_bool(0.8) {
            let tenths: u32 = rng.random_range(0..=10);
            let value = f64::from(tenths) / 10.0;
            expected.insert(c.clone(), value);
            entries.push(format!("{}: {value}", quote(rng, c)));
        }
    }
    if rng.random_bool(0.4) {
        let oov = OOV.choose(rng).unwrap();
        entries.push(format!("{}: 0.95", quote(rng, oov)));
    }
    let literal = format!("{{{}}}", entries.join(", "));
    MapCase {
        text: wrap(rng, &literal),
        candidates,
        expected,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
