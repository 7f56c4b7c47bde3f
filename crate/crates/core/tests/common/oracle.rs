//! Independent reference computations.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// F1 from membership counts over plain vectors, no set types involved.
pub fn brute_f1(pred: &[String], gold: &[String]) -> f64 {
    let mut tp = 0usize;
    for p in pred {
        let mut found = false;
        for g in gold {
            if p == g {
                found = true;
            }
        }
        if found {
            tp += 1;
        }
    }
    if pred.is_empty() || tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / pred.len() as f64;
    let r = tp as f64 / gold.len() as f64;
    2.0 * p * r / (p + r)
}

fn distinct(rng: &mut ChaCha8Rng, min: usize) -> Vec<String> {
    let n = rng.random_range(min..=6);
    let mut out: Vec<String> = Vec::new();
    while out.len() < n {
        let e = format!("m.{}", rng.random_range(0..9));
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Random (pred, gold) pair; gold is non-empty, both have at most 6 items.
pub fn set_pair(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>) {
    (distinct(rng, 0), distinct(rng, 1))
}
