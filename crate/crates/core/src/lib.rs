//! Multi-hop question answering over a knowledge graph.
//!
//! A question is answered by growing relation paths out of its topic
//! entities. At every step an LLM turns the path so far into a short
//! narrative, proposes candidate relations from the frontier's neighborhood,
//! and scores them against the exploration priors distilled from earlier
//! dead ends. Candidates at or above the threshold branch; the answer is the
//! frontier of the best-scoring path.
//!
//! ```no_run
//! use wayfinder::{EngineConfig, Gateway, KnowledgeGraph, Question, Reasoner, ScriptedBackend};
//!
//! let graph = KnowledgeGraph::load_path("graph.tsv")?;
//! let backend = ScriptedBackend::load("rules.json")?;
//! let reasoner = Reasoner::new(&graph, EngineConfig::default(), Gateway::new(backend));
//! let outcome = reasoner.answer(&Question::new("q1", "Who directed Titanic?", &["Titanic"]))?;
//! println!("{:?}", outcome.answer.entities);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod config;
pub mod engine;
pub mod eval;
pub mod feedback;
pub mod graph;
pub mod llm;
pub mod memory;
pub mod narrator;
pub mod trajectory;

pub use engine::{AnswerSet, EngineError, Question, Reasoner, SessionOutcome, SessionStats};
pub use graph::{EntityFrontier, GraphError, KnowledgeGraph, Triple};
pub use llm::{
    Backend, BudgetLedger, CompletionRequest, CompletionResult, Gateway, LiveBackend, LiveConfig, PromptKind,
    RetryPolicy, ScriptedBackend, ScriptedRule, TemplateSet,
};
pub use memory::{ExplorationPriors, TrajectorySummary};
pub use trajectory::{EngineConfig, RelationSequence, Status, TerminationReason, Trajectory};
