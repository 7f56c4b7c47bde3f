//! Two-stage relation selection: narrative-conditioned retrieval of up to `k`
//! candidates, then one scoring call that sees the path so far and the
//! exploration priors. Candidates scoring at least the threshold branch.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::KnowledgeGraph;
use crate::llm::prompt::relation_set_literal;
use crate::llm::{parse_relation_list, parse_score_map, BudgetLedger, Gateway, GatewayError, PromptKind};
use crate::narrator::Narrative;
use crate::trajectory::{RelationSequence, Trajectory, TrajectoryError};

/// Result of an LLM stage together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome<T> {
    pub value: T,
    /// Extra calls spent re-asking after unparseable output.
    pub reasks: u32,
    /// Output stayed unparseable after the re-ask and a fallback was used.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidates {
    /// Descending by score, ties broken lexicographically.
    pub entries: Vec<(String, f64)>,
    pub narrative_used: Narrative,
    pub priors_version: u64,
}

impl ScoredCandidates {
    pub fn new(scores: BTreeMap<String, f64>, narrative_used: Narrative, priors_version: u64) -> Self {
        let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self {
            entries,
            narrative_used,
            priors_version,
        }
    }

    pub fn score(&self, relation: &str) -> Option<f64> {
        self.entries.iter().find(|(r, _)| r == relation).map(|(_, s)| *s)
    }
}

/// Asks the model for at most `k` relations drawn from `neighborhood`.
/// Unparseable output is re-asked once, then treated as an empty selection.
pub fn retrieve_candidates(
    question: &str,
    narrative: &Narrative,
    neighborhood: &[String],
    k: usize,
    gateway: &Gateway,
    ledger: &mut BudgetLedger,
) -> Result<StageOutcome<Vec<String>>, GatewayError> {
    let fields = BTreeMap::from([
        ("question", question.to_owned()),
        ("context_narrative", narrative.text.clone()),
        ("candidate_relations", relation_set_literal(neighborhood)),
        ("k", k.to_string()),
    ]);
    let request = gateway.render(PromptKind::CandidateRetrieval, &fields)?;
    let mut reasks = 0;
    loop {
        let result = match gateway.complete(&request, ledger) {
            Ok(r) => r,
            // the failed re-ask was never charged, so it does not count
            Err(err) if reasks > 0 => {
                tracing::warn!(%err, "candidate retrieval re-ask failed; no candidates");
                return Ok(StageOutcome {
                    value: Vec::new(),
                    reasks: 0,
                    degraded: true,
                });
            }
            Err(err) => return Err(err),
        };
        match parse_relation_list(&result.text, neighborhood, k) {
            Ok(value) => {
                return Ok(StageOutcome {
                    value,
                    reasks,
                    degraded: false,
                })
            }
            Err(err) if reasks == 0 => {
                tracing::debug!(%err, "re-asking candidate retrieval");
                reasks += 1;
            }
            Err(err) => {
                tracing::warn!(%err, "candidate retrieval unparseable; no candidates");
                return Ok(StageOutcome {
                    value: Vec::new(),
                    reasks,
                    degraded: true,
                });
            }
        }
    }
}

/// Scores every candidate in a single call. Unparseable output is re-asked
/// once, then every candidate scores 0.
pub fn rank_candidates(
    question: &str,
    sequence: &RelationSequence,
    candidates: &[String],
    priors_text: &str,
    gateway: &Gateway,
    ledger: &mut BudgetLedger,
) -> Result<StageOutcome<BTreeMap<String, f64>>, GatewayError> {
    let historical_path = if sequence.is_empty() {
        "(empty)".to_owned()
    } else {
        sequence.arrow_path()
    };
    let fields = BTreeMap::from([
        ("question", question.to_owned()),
        ("historical_path", historical_path),
        ("top_k_relations", relation_set_literal(candidates)),
        ("exploration_experience", priors_text.to_owned()),
    ]);
    let request = gateway.render(PromptKind::Reranking, &fields)?;
    let mut reasks = 0;
    loop {
        let result = match gateway.complete(&request, ledger) {
            Ok(r) => r,
            Err(err) if reasks > 0 => {
                tracing::warn!(%err, "re-ranking re-ask failed; scoring all candidates 0");
                return Ok(StageOutcome {
                    value: candidates.iter().map(|c| (c.clone(), 0.0)).collect(),
                    reasks: 0,
                    degraded: true,
                });
            }
            Err(err) => return Err(err),
        };
        match parse_score_map(&result.text, candidates) {
            Ok(value) => {
                return Ok(StageOutcome {
                    value,
                    reasks,
                    degraded: false,
                })
            }
            Err(err) if reasks == 0 => {
                tracing::debug!(%err, "re-asking re-ranking");
                reasks += 1;
            }
            Err(err) => {
                tracing::warn!(%err, "re-ranking unparseable; scoring all candidates 0");
                return Ok(StageOutcome {
                    value: candidates.iter().map(|c| (c.clone(), 0.0)).collect(),
                    reasks,
                    degraded: true,
                });
            }
        }
    }
}

/// Branches `traj` along every candidate scoring at least `threshold` whose
/// traversal reaches at least one entity. Children come out in the
/// candidates' order and take ids from `next_id`.
pub fn expand(
    traj: &Trajectory,
    scored: &ScoredCandidates,
    graph: &KnowledgeGraph,
    threshold: f64,
    next_id: &mut u64,
) -> Result<Vec<Trajectory>, TrajectoryError> {
    if traj.status.is_terminated() {
        return Err(TrajectoryError::AlreadyTerminated(traj.id));
    }
    let mut children = Vec::new();
    for (relation, score) in &scored.entries {
        if *score < threshold {
            continue;
        }
        let Some(frontier) = graph.traverse(&traj.frontier, relation) else {
            continue;
        };
        children.push(traj.branch(*next_id, relation, *score, frontier)?);
        *next_id += 1;
    }
    Ok(children)
}
