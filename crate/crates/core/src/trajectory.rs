//! Reasoning paths and their lifecycle.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EntityFrontier, DEFAULT_NEIGHBORHOOD_CAP};

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory {0} is already terminated")]
    AlreadyTerminated(u64),
}

/// Ordered relations `r1 .. rt` of a path. Appending returns a new value and
/// leaves the base untouched, so sibling branches never share state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationSequence(Vec<String>);

impl RelationSequence {
    pub fn new() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn append(&self, relation: impl Into<String>) -> Self {
        let mut relations = self.0.clone();
        relations.push(relation.into());
        Self(relations)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn relations(&self) -> &[String] {
        &self.0
    }

    /// `r1 → r2 → …`
    pub fn arrow_path(&self) -> String {
        self.0.join(" → ")
    }
}

impl<S: Into<String>> FromIterator<S> for RelationSequence {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for RelationSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.arrow_path())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Active,
    TerminatedDepth,
    TerminatedNoExpand,
}

impl Status {
    pub fn is_terminated(self) -> bool {
        !matches!(self, Status::Active)
    }

    /// Reason string rendered into trajectory summaries.
    pub fn termination_reason(self) -> Option<TerminationReason> {
        match self {
            Status::Active => None,
            Status::TerminatedDepth => Some(TerminationReason::MaxDepth),
            Status::TerminatedNoExpand => Some(TerminationReason::NoExpansion),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    #[serde(rename = "Max depth reached")]
    MaxDepth,
    #[serde(rename = "No expandable relations")]
    NoExpansion,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::MaxDepth => "Max depth reached",
            TerminationReason::NoExpansion => "No expandable relations",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One reasoning path: its relation sequence, the entities it currently
/// binds, and one relevance score per accepted relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub id: u64,
    pub parent: Option<u64>,
    pub question_id: Arc<str>,
    pub sequence: RelationSequence,
    pub frontier: EntityFrontier,
    pub step_scores: Vec<f64>,
    pub status: Status,
    pub degraded: bool,
}

impl Trajectory {
    pub fn root(id: u64, question_id: Arc<str>, frontier: EntityFrontier) -> Self {
        Self {
            id,
            parent: None,
            question_id,
            sequence: RelationSequence::new(),
            frontier,
            step_scores: Vec::new(),
            status: Status::Active,
            degraded: false,
        }
    }

    /// Child path extended by `relation` with relevance `score`.
    pub fn branch(
        &self,
        id: u64,
        relation: &str,
        score: f64,
        frontier: EntityFrontier,
    ) -> Result<Self, TrajectoryError> {
        if self.status.is_terminated() {
            return Err(TrajectoryError::AlreadyTerminated(self.id));
        }
        let mut step_scores = self.step_scores.clone();
        step_scores.push(score);
        Ok(Self {
            id,
            parent: Some(self.id),
            question_id: Arc::clone(&self.question_id),
            sequence: self.sequence.append(relation),
            frontier,
            step_scores,
            status: Status::Active,
            degraded: false,
        })
    }

    pub fn depth(&self) -> usize {
        self.sequence.len()
    }

    /// Mean of the per-step scores; zero for a path with no steps.
    pub fn path_score(&self) -> f64 {
        path_score(&self.step_scores)
    }
}

pub fn path_score(step_scores: &[f64]) -> f64 {
    if step_scores.is_empty() {
        return 0.0;
    }
    step_scores.iter().sum::<f64>() / step_scores.len() as f64
}

/// Total order used to pick the best path: higher score, then shorter
/// sequence, then lexicographically smaller sequence. `Ordering::Less`
/// means `a` ranks ahead of `b`.
pub fn rank_paths(a: &Trajectory, b: &Trajectory) -> Ordering {
    b.path_score()
        .total_cmp(&a.path_score())
        .then_with(|| a.depth().cmp(&b.depth()))
        .then_with(|| a.sequence.cmp(&b.sequence))
}

/// Termination check for an active trajectory. Depth is tested before
/// expandability.
pub fn classify_termination(
    traj: &Trajectory,
    config: &EngineConfig,
    expandable: bool,
) -> Result<Status, TrajectoryError> {
    if traj.status.is_terminated() {
        return Err(TrajectoryError::AlreadyTerminated(traj.id));
    }
    Ok(if traj.depth() >= config.max_depth {
        Status::TerminatedDepth
    } else if !expandable {
        Status::TerminatedNoExpand
    } else {
        Status::Active
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Maximum number of relations in a path (L).
    pub max_depth: usize,
    /// Candidate relations proposed per step (k).
    pub candidates_k: usize,
    /// Step budget per question (I).
    pub max_iterations: usize,
    /// Inclusive score threshold for branching (ζ).
    pub threshold: f64,
    pub subgraph_hops: usize,
    pub neighborhood_cap: usize,
    /// PatternExtraction prompts see at most this many recent summaries.
    pub summary_window: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            candidates_k: 3,
            max_iterations: 30,
            threshold: 0.5,
            subgraph_hops: 4,
            neighborhood_cap: DEFAULT_NEIGHBORHOOD_CAP,
            summary_window: 10,
        }
    }
}

impl EngineConfig {
    /// Defaults with `k = 4`, the setting used for ComplexWebQuestions.
    pub fn cwq() -> Self {
        Self {
            candidates_k: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_depth == 0 {
            return Err("max_depth must be positive".into());
        }
        if self.candidates_k == 0 {
            return Err("candidates_k must be positive".into());
        }
        // above 1 is allowed: nothing branches
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return Err(format!("threshold {} must be non-negative", self.threshold));
        }
        if self.subgraph_hops == 0 || self.neighborhood_cap == 0 || self.summary_window == 0 {
            return Err("subgraph_hops, neighborhood_cap and summary_window must be positive".into());
        }
        Ok(())
    }
}

/// One line of the JSON-lines trace log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Started {
        question_id: String,
        question: String,
        topics: Vec<String>,
        config: EngineConfig,
    },
    Created {
        question_id: String,
        trajectory: u64,
        parent: Option<u64>,
        relations: RelationSequence,
        frontier: EntityFrontier,
        step_scores: Vec<f64>,
    },
    Expanded {
        question_id: String,
        iteration: usize,
        trajectory: u64,
        narrative: Option<String>,
        neighborhood: usize,
        candidates: Vec<(String, f64)>,
        children: Vec<u64>,
    },
    Terminated {
        question_id: String,
        trajectory: u64,
        reason: TerminationReason,
        relations: RelationSequence,
        degraded: bool,
    },
    Summarized {
        question_id: String,
        trajectory: u64,
        summary: String,
        priors_version: u64,
    },
    Degraded {
        question_id: String,
        trajectory: u64,
        stage: String,
        detail: String,
    },
    Answered {
        question_id: String,
        entities: Vec<String>,
        best: Option<u64>,
        score: f64,
        iterations: usize,
        llm_calls: u64,
        total_tokens: u64,
    },
}
