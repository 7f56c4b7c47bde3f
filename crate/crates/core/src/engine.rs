//! Best-first exploration loop.
//!
//! Each iteration pops the highest-priority active trajectory and runs one
//! step on it: narrate the path, read the frontier's neighborhood, retrieve
//! and rank candidates, branch on the threshold, then classify children and
//! parent. Trajectories that stop on depth or lack of expansion are
//! summarized and folded into the exploration priors immediately, so later
//! steps rank against the updated priors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::feedback::{expand, rank_candidates, retrieve_candidates, ScoredCandidates};
use crate::graph::{EntityFrontier, KnowledgeGraph};
use crate::llm::{BudgetLedger, Gateway};
use crate::memory::{consolidate, summarize_trajectory, ExplorationPriors};
use crate::narrator::generate_context;
use crate::trajectory::{classify_termination, rank_paths, EngineConfig, Status, TraceEvent, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("question has no topic entities")]
    NoTopics,
    #[error("topic not in graph: {}", .0.join(", "))]
    TopicNotInGraph(Vec<String>),
    #[error("invalid engine config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub topics: Vec<String>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>, topics: &[&str]) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            topics: topics.iter().map(|t| t.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerSet {
    pub entities: Vec<String>,
    pub best_path: Option<Trajectory>,
    pub score: f64,
    /// Why the set is empty, when it is.
    pub diagnostic: Option<String>,
}

impl AnswerSet {
    fn empty(diagnostic: impl Into<String>) -> Self {
        Self {
            entities: Vec::new(),
            best_path: None,
            score: 0.0,
            diagnostic: Some(diagnostic.into()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

/// How far one step got before stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepReach {
    /// Hard gateway failures; the trajectory was cut at that stage.
    ContextFailed,
    RetrievalFailed,
    RankingFailed,
    EmptyNeighborhood,
    NoCandidates,
    Ranked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub trajectory: u64,
    /// Sequence length when the step started.
    pub depth: usize,
    pub reach: StepReach,
    pub reasks: u32,
    pub children: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionStats {
    pub iterations: usize,
    pub steps: Vec<StepRecord>,
    pub terminations: usize,
    pub depth_terminations: usize,
    pub no_expand_terminations: usize,
    /// Terminations whose summary and consolidation both succeeded.
    pub summarized: usize,
    /// Terminations whose summary succeeded but consolidation failed.
    pub unconsolidated: usize,
    pub degraded_steps: usize,
}

impl SessionStats {
    pub fn reasks(&self) -> u32 {
        self.steps.iter().map(|s| s.reasks).sum()
    }

    /// Calls implied by the loop's structure: per ranked step one retrieval
    /// and one ranking call plus a context call once the path is non-empty,
    /// two calls per summarized termination, plus re-asks.
    pub fn expected_calls(&self) -> u64 {
        let steps: u64 = self
            .steps
            .iter()
            .map(|s| {
                let context = u64::from(s.depth > 0);
                match s.reach {
                    StepReach::Ranked => 2 + context,
                    StepReach::NoCandidates | StepReach::RankingFailed => 1 + context,
                    StepReach::EmptyNeighborhood | StepReach::RetrievalFailed => context,
                    StepReach::ContextFailed => 0,
                }
            })
            .sum();
        steps + 2 * self.summarized as u64 + self.unconsolidated as u64 + u64::from(self.reasks())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionOutcome {
    pub question_id: String,
    pub answer: AnswerSet,
    pub ledger: BudgetLedger,
    pub priors: ExplorationPriors,
    pub stats: SessionStats,
    /// Final state of every trajectory, by id.
    pub trajectories: Vec<Trajectory>,
    pub trace: Vec<TraceEvent>,
}

impl SessionOutcome {
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.trace {
            out.push_str(&serde_json::to_string(event).expect("trace event serializes"));
            out.push('\n');
        }
        out
    }
}

/// Queue entry; the max-heap pops unexpanded roots first (in creation
/// order), then the best-scoring path.
struct Queued(Trajectory);

impl Queued {
    fn is_root(&self) -> bool {
        self.0.sequence.is_empty()
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.is_root()
            .cmp(&other.is_root())
            .then_with(|| rank_paths(&other.0, &self.0))
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

/// Answers questions over one graph with one backend.
#[derive(Debug, Clone)]
pub struct Reasoner<'g> {
    graph: &'g KnowledgeGraph,
    config: EngineConfig,
    gateway: Gateway,
}

impl<'g> Reasoner<'g> {
    pub fn new(graph: &'g KnowledgeGraph, config: EngineConfig, gateway: Gateway) -> Self {
        Self { graph, config, gateway }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        self.graph
    }

    /// Runs a session with fresh (empty) priors.
    pub fn answer(&self, question: &Question) -> Result<SessionOutcome, EngineError> {
        self.answer_with_priors(question, ExplorationPriors::new())
    }

    /// Runs a session starting from `priors`, e.g. ones persisted by an
    /// earlier run.
    pub fn answer_with_priors(
        &self,
        question: &Question,
        priors: ExplorationPriors,
    ) -> Result<SessionOutcome, EngineError> {
        self.config.validate().map_err(EngineError::Config)?;
        if question.topics.is_empty() {
            return Err(EngineError::NoTopics);
        }
        let missing: Vec<String> = question
            .topics
            .iter()
            .filter(|t| !self.graph.contains_entity(t))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(EngineError::TopicNotInGraph(missing));
        }
        Ok(Session::new(self, question, priors).run())
    }
}

struct Session<'a, 'g> {
    reasoner: &'a Reasoner<'g>,
    question: &'a Question,
    qid: Arc<str>,
    next_id: u64,
    queue: BinaryHeap<Queued>,
    /// Terminated or retired trajectories.
    settled: Vec<Trajectory>,
    priors: ExplorationPriors,
    ledger: BudgetLedger,
    stats: SessionStats,
    trace: Vec<TraceEvent>,
}

impl<'a, 'g> Session<'a, 'g> {
    fn new(reasoner: &'a Reasoner<'g>, question: &'a Question, priors: ExplorationPriors) -> Self {
        Self {
            reasoner,
            question,
            qid: Arc::from(question.id.as_str()),
            next_id: 0,
            queue: BinaryHeap::new(),
            settled: Vec::new(),
            priors,
            ledger: BudgetLedger::new(question.id.clone()),
            stats: SessionStats::default(),
            trace: Vec::new(),
        }
    }

    fn config(&self) -> &EngineConfig {
        &self.reasoner.config
    }

    fn run(mut self) -> SessionOutcome {
        self.trace.push(TraceEvent::Started {
            question_id: self.question.id.clone(),
            question: self.question.text.clone(),
            topics: self.question.topics.clone(),
            config: self.config().clone(),
        });

        let mut seen = Vec::new();
        for topic in &self.question.topics {
            if seen.contains(topic) {
                continue;
            }
            seen.push(topic.clone());
            let root = Trajectory::root(
                self.fresh_id(),
                Arc::clone(&self.qid),
                EntityFrontier::single(topic.clone()),
            );
            self.created(&root);
            self.queue.push(Queued(root));
        }

        while self.stats.iterations < self.config().max_iterations {
            let Some(Queued(traj)) = self.queue.pop() else {
                break;
            };
            self.stats.iterations += 1;
            self.step(traj);
        }

        let answer = self.extract_answer();
        self.trace.push(TraceEvent::Answered {
            question_id: self.question.id.clone(),
            entities: answer.entities.clone(),
            best: answer.best_path.as_ref().map(|t| t.id),
            score: answer.score,
            iterations: self.stats.iterations,
            llm_calls: self.ledger.llm_calls,
            total_tokens: self.ledger.total_tokens,
        });

        let mut trajectories: Vec<Trajectory> = self.settled;
        trajectories.extend(self.queue.into_iter().map(|q| q.0));
        trajectories.sort_by_key(|t| t.id);

        SessionOutcome {
            question_id: self.question.id.clone(),
            answer,
            ledger: self.ledger,
            priors: self.priors,
            stats: self.stats,
            trajectories,
            trace: self.trace,
        }
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn created(&mut self, traj: &Trajectory) {
        self.trace.push(TraceEvent::Created {
            question_id: self.question.id.clone(),
            trajectory: traj.id,
            parent: traj.parent,
            relations: traj.sequence.clone(),
            frontier: traj.frontier.clone(),
            step_scores: traj.step_scores.clone(),
        });
    }

    fn degraded(&mut self, traj: &Trajectory, stage: &str, detail: String) {
        tracing::warn!(question = %self.question.id, trajectory = traj.id, stage, %detail, "degraded step");
        self.trace.push(TraceEvent::Degraded {
            question_id: self.question.id.clone(),
            trajectory: traj.id,
            stage: stage.to_owned(),
            detail,
        });
    }

    fn step(&mut self, mut traj: Trajectory) {
        let iteration = self.stats.iterations;
        let mut record = StepRecord {
            iteration,
            trajectory: traj.id,
            depth: traj.depth(),
            reach: StepReach::ContextFailed,
            reasks: 0,
            children: 0,
        };
        let gateway = self.reasoner.gateway.clone();
        let question = self.question.text.as_str();

        let narrative = match generate_context(question, &traj.sequence, &gateway, &mut self.ledger) {
            Ok(n) => n,
            Err(e) => return self.fail_step(traj, record, "context", e.to_string()),
        };

        let neighborhood = self
            .reasoner
            .graph
            .neighborhood(&traj.frontier, self.config().neighborhood_cap);
        let mut candidates = Vec::new();
        let mut children = Vec::new();
        if neighborhood.is_empty() {
            record.reach = StepReach::EmptyNeighborhood;
        } else {
            let retrieved = match retrieve_candidates(
                question,
                &narrative,
                &neighborhood,
                self.config().candidates_k,
                &gateway,
                &mut self.ledger,
            ) {
                Ok(r) => r,
                Err(e) => {
                    record.reach = StepReach::RetrievalFailed;
                    return self.fail_step(traj, record, "retrieval", e.to_string());
                }
            };
            record.reasks += retrieved.reasks;
            if retrieved.degraded {
                self.stats.degraded_steps += 1;
                self.degraded(&traj, "retrieval", "unparseable candidate list".into());
            }

            if retrieved.value.is_empty() {
                record.reach = StepReach::NoCandidates;
            } else {
                let ranked = match rank_candidates(
                    question,
                    &traj.sequence,
                    &retrieved.value,
                    self.priors.current(),
                    &gateway,
                    &mut self.ledger,
                ) {
                    Ok(r) => r,
                    Err(e) => {
                        record.reach = StepReach::RankingFailed;
                        return self.fail_step(traj, record, "ranking", e.to_string());
                    }
                };
                record.reasks += ranked.reasks;
                record.reach = StepReach::Ranked;
                if ranked.degraded {
                    self.stats.degraded_steps += 1;
                    self.degraded(&traj, "ranking", "unparseable score map".into());
                }
                let scored = ScoredCandidates::new(ranked.value, narrative.clone(), self.priors.version);
                children = expand(
                    &traj,
                    &scored,
                    self.reasoner.graph,
                    self.config().threshold,
                    &mut self.next_id,
                )
                .expect("popped trajectories are active");
                candidates = scored.entries;
            }
        }

        record.children = children.len();
        self.trace.push(TraceEvent::Expanded {
            question_id: self.question.id.clone(),
            iteration,
            trajectory: traj.id,
            narrative: (!traj.sequence.is_empty()).then(|| narrative.text.clone()),
            neighborhood: neighborhood.len(),
            candidates,
            children: children.iter().map(|c| c.id).collect(),
        });
        self.stats.steps.push(record);

        let expandable = !children.is_empty();
        for mut child in children {
            self.created(&child);
            let status = classify_termination(&child, self.config(), true).expect("fresh child is active");
            if status.is_terminated() {
                child.status = status;
                self.terminate(child);
            } else {
                self.queue.push(Queued(child));
            }
        }

        let status = classify_termination(&traj, self.config(), expandable).expect("popped trajectories are active");
        if status.is_terminated() {
            traj.status = status;
            self.terminate(traj);
        } else {
            // retired: the lineage continues in its children
            self.settled.push(traj);
        }
    }

    fn fail_step(&mut self, mut traj: Trajectory, record: StepRecord, stage: &str, detail: String) {
        self.stats.degraded_steps += 1;
        self.degraded(&traj, stage, detail);
        self.stats.steps.push(record);
        traj.degraded = true;
        traj.status = Status::TerminatedNoExpand;
        self.terminate(traj);
    }

    fn terminate(&mut self, traj: Trajectory) {
        let reason = traj.status.termination_reason().expect("terminated status");
        self.stats.terminations += 1;
        match traj.status {
            Status::TerminatedDepth => self.stats.depth_terminations += 1,
            Status::TerminatedNoExpand => self.stats.no_expand_terminations += 1,
            Status::Active => unreachable!(),
        }
        self.trace.push(TraceEvent::Terminated {
            question_id: self.question.id.clone(),
            trajectory: traj.id,
            reason,
            relations: traj.sequence.clone(),
            degraded: traj.degraded,
        });

        let gateway = self.reasoner.gateway.clone();
        let window = self.config().summary_window;
        let summarized =
            summarize_trajectory(&self.question.text, &traj, &gateway, &mut self.ledger).and_then(|summary| {
                let text = summary.text.clone();
                consolidate(&mut self.priors, summary, window, &gateway, &mut self.ledger).inspect_err(|_| {
                    self.stats.unconsolidated += 1;
                })?;
                Ok(text)
            });
        match summarized {
            Ok(summary) => {
                self.stats.summarized += 1;
                self.trace.push(TraceEvent::Summarized {
                    question_id: self.question.id.clone(),
                    trajectory: traj.id,
                    summary,
                    priors_version: self.priors.version,
                });
            }
            Err(e) => self.degraded(&traj, "memory", e.to_string()),
        }
        self.settled.push(traj);
    }

    /// Best path among trajectories with at least one step that were not
    /// retired by branching.
    fn extract_answer(&self) -> AnswerSet {
        let best = self
            .settled
            .iter()
            .filter(|t| t.status.is_terminated())
            .chain(self.queue.iter().map(|q| &q.0))
            .filter(|t| !t.sequence.is_empty())
            .min_by(|a, b| rank_paths(a, b));
        match best {
            Some(t) => AnswerSet {
                entities: t.frontier.as_slice().to_vec(),
                best_path: Some(t.clone()),
                score: t.path_score(),
                diagnostic: None,
            },
            None if self.stats.iterations == 0 => AnswerSet::empty("no iterations were run"),
            None => AnswerSet::empty("no trajectory expanded beyond its topic entity"),
        }
    }
}
