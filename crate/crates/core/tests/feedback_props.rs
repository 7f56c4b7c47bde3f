use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;
use wayfinder::feedback::{expand, ScoredCandidates};
use wayfinder::narrator::{Narrative, START_NARRATIVE};
use wayfinder::{EntityFrontier, Gateway, KnowledgeGraph, PromptKind, ScriptedBackend, Trajectory, Triple};

fn star(n: usize) -> KnowledgeGraph {
    KnowledgeGraph::from_triples((0..n).map(|i| Triple::new("hub", format!("rel.r{i}"), format!("leaf{i}"))))
}

fn scored(scores: &[f64]) -> ScoredCandidates {
    let map: BTreeMap<String, f64> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("rel.r{i}"), *s))
        .collect();
    let start = Narrative {
        text: START_NARRATIVE.into(),
        for_step: 0,
    };
    ScoredCandidates::new(map, start, 0)
}

fn root() -> Trajectory {
    Trajectory::root(0, Arc::from("q"), EntityFrontier::single("hub"))
}

fn branches(graph: &KnowledgeGraph, scores: &[f64], zeta: f64) -> Vec<Trajectory> {
    let mut next = 1;
    expand(&root(), &scored(scores), graph, zeta, &mut next).unwrap()
}

#[test]
fn inclusive_boundary() {
    let g = star(3);
    assert_eq!(branches(&g, &[0.9, 0.5, 0.4], 0.5).len(), 2);
    let counts: Vec<usize> = [0.4, 0.5, 0.6, 0.7]
        .iter()
        .map(|z| branches(&g, &[0.9, 0.5, 0.4], *z).len())
        .collect();
    assert_eq!(counts, [3, 2, 1, 1]);
}

#[test]
fn untraversable_candidate_is_skipped() {
    let g = star(1);
    let kids = branches(&g, &[0.9, 0.9], 0.5);
    assert_eq!(kids.len(), 1);
    assert_eq!(kids[0].sequence.relations(), ["rel.r0"]);
}

proptest! {
    #[test]
    fn branch_count_is_count_above_threshold(
        scores in prop::collection::vec((0u32..=10).prop_map(|t| f64::from(t) / 10.0), 1..8),
        z1 in 0u32..=10,
        z2 in 0u32..=10,
    ) {
        let g = star(scores.len());
        let (lo, hi) = (f64::from(z1.min(z2)) / 10.0, f64::from(z1.max(z2)) / 10.0);
        let at_lo = branches(&g, &scores, lo);
        let at_hi = branches(&g, &scores, hi);
        prop_assert_eq!(at_lo.len(), scores.iter().filter(|s| **s >= lo).count());
        prop_assert!(at_hi.len() <= at_lo.len());
        let lo_rel: BTreeSet<_> = at_lo.iter().map(|t| t.sequence.clone()).collect();
        prop_assert!(at_hi.iter().all(|t| lo_rel.contains(&t.sequence)));
    }

    #[test]
    fn children_are_grounded_in_scored_candidates(
        scores in prop::collection::vec((0u32..=10).prop_map(|t| f64::from(t) / 10.0), 1..8),
        leaves in 1usize..8,
    ) {
        let g = star(leaves);
        let s = scored(&scores);
        let mut next = 1;
        for child in expand(&root(), &s, &g, 0.0, &mut next).unwrap() {
            let rel = child.sequence.relations().last().unwrap();
            prop_assert_eq!(s.score(rel), Some(child.step_scores[0]));
            prop_assert_eq!(Some(child.frontier.clone()), g.traverse(&root().frontier, rel));
            prop_assert_eq!(child.parent, Some(0));
        }
    }

    #[test]
    fn rendering_is_injective_in_the_question(a in "[A-Za-z ?]{1,30}", b in "[A-Za-z ?]{1,30}") {
        prop_assume!(a != b);
        let gw = Gateway::new(ScriptedBackend::default());
        for kind in PromptKind::ALL {
            let fields = |q: &str| -> BTreeMap<&str, String> {
                kind.fields().iter().map(|f| (*f, if *f == "question" || *f == "trajectory_summaries" { q.to_owned() } else { "x".to_owned() })).collect()
            };
            let ra = gw.render(kind, &fields(&a)).unwrap();
            let rb = gw.render(kind, &fields(&b)).unwrap();
            prop_assert_ne!(&ra.rendered_text, &rb.rendered_text);
            prop_assert_ne!(ra.fingerprint(), rb.fingerprint());
        }
    }
}
