mod common;

use common::literals::rng;
use common::random_session::random_case;
use proptest::prelude::*;
use wayfinder::{Question, Reasoner, Status};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sessions_respect_bounds_and_budget(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed));
        let reasoner = Reasoner::new(&case.graph, case.config.clone(), case.gateway.clone());
        let out = reasoner.answer(&Question::new("q", "Where does it lead?", &[case.topic.as_str()])).unwrap();

        prop_assert!(out.stats.iterations <= case.config.max_iterations);
        for t in &out.trajectories {
            prop_assert!(t.sequence.len() <= case.config.max_depth);
            prop_assert_eq!(t.step_scores.len(), t.sequence.len());
            if t.status == Status::TerminatedDepth {
                prop_assert_eq!(t.sequence.len(), case.config.max_depth);
            }
        }
        prop_assert_eq!(out.ledger.llm_calls, out.stats.expected_calls());
        prop_assert_eq!(out.priors.version, out.stats.summarized as u64);
        prop_assert_eq!(out.priors.summaries.len(), out.stats.terminations);

        if let Some(best) = &out.answer.best_path {
            let mut frontier = wayfinder::EntityFrontier::single(case.topic.clone());
            for rel in best.sequence.relations() {
                frontier = case.graph.traverse(&frontier, rel).unwrap();
            }
            prop_assert_eq!(&frontier, &best.frontier);
            prop_assert_eq!(out.answer.entities.as_slice(), best.frontier.as_slice());
            prop_assert!(best.step_scores.iter().all(|s| *s >= case.config.threshold));
        }
    }

    #[test]
    fn sessions_are_deterministic(seed in any::<u64>()) {
        let case = random_case(&mut rng(seed));
        let reasoner = Reasoner::new(&case.graph, case.config.clone(), case.gateway.clone());
        let q = Question::new("q", "Where does it lead?", &[case.topic.as_str()]);
        let a = reasoner.answer(&q).unwrap();
        let b = reasoner.answer(&q).unwrap();
        prop_assert_eq!(a.trace_jsonl(), b.trace_jsonl());
    }
}
