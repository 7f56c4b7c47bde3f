//! Trajectory summaries and the exploration priors distilled from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::prompt::bullet_list;
use crate::llm::{BudgetLedger, Gateway, GatewayError, PromptKind};
use crate::narrator::unquote;
use crate::trajectory::{RelationSequence, TerminationReason, Trajectory};

/// Returned by [`ExplorationPriors::current`] before any consolidation.
pub const NO_PRIORS: &str = "No prior exploration experience yet.";

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("trajectory {0} is still active and cannot be summarized")]
    Active(u64),
    #[error("{0:?} returned an empty completion")]
    Empty(PromptKind),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("priors file: {0}")]
    Io(#[from] std::io::Error),
    #[error("priors file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("priors file is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub text: String,
    #[serde(rename = "relations")]
    pub source_sequence: RelationSequence,
    pub reason: TerminationReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationPriors {
    pub version: u64,
    pub text: String,
    pub summaries: Vec<TrajectorySummary>,
}

impl ExplorationPriors {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    /// Priors text for the re-ranking prompt.
    pub fn current(&self) -> &str {
        if self.text.is_empty() {
            NO_PRIORS
        } else {
            &self.text
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MemoryError> {
        let priors: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        priors.check()?;
        Ok(priors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MemoryError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn check(&self) -> Result<(), MemoryError> {
        if self.version != self.summaries.len() as u64 {
            return Err(MemoryError::Inconsistent(format!(
                "version {} but {} summaries",
                self.version,
                self.summaries.len()
            )));
        }
        if self.text.is_empty() != self.summaries.is_empty() {
            return Err(MemoryError::Inconsistent(
                "text and summaries must be both empty or both set".into(),
            ));
        }
        Ok(())
    }
}

/// Describes one terminated trajectory.
pub fn summarize_trajectory(
    question: &str,
    traj: &Trajectory,
    gateway: &Gateway,
    ledger: &mut BudgetLedger,
) -> Result<TrajectorySummary, MemoryError> {
    let reason = traj.status.termination_reason().ok_or(MemoryError::Active(traj.id))?;
    let fields = BTreeMap::from([
        ("question", question.to_owned()),
        ("explored_path", traj.sequence.arrow_path()),
        ("reason_for_termination", reason.as_str().to_owned()),
    ]);
    let result = gateway.ask(PromptKind::TrajectorySummary, &fields, ledger)?;
    let text = unquote(result.text.trim());
    if text.is_empty() {
        return Err(MemoryError::Empty(PromptKind::TrajectorySummary));
    }
    Ok(TrajectorySummary {
        text: text.to_owned(),
        source_sequence: traj.sequence.clone(),
        reason,
    })
}

/// Folds `summary` into the priors. The prompt sees the `window` most recent
/// summaries, newest last. On error `priors` is left untouched.
pub fn consolidate(
    priors: &mut ExplorationPriors,
    summary: TrajectorySummary,
    window: usize,
    gateway: &Gateway,
    ledger: &mut BudgetLedger,
) -> Result<(), MemoryError> {
    let start = (priors.summaries.len() + 1).saturating_sub(window);
    let mut recent: Vec<&str> = priors.summaries[start.min(priors.summaries.len())..]
        .iter()
        .map(|s| s.text.as_str())
        .collect();
    recent.push(&summary.text);
    let fields = BTreeMap::from([("trajectory_summaries", bullet_list(&recent))]);
    let result = gateway.ask(PromptKind::PatternExtraction, &fields, ledger)?;
    let text = unquote(result.text.trim());
    if text.is_empty() {
        return Err(MemoryError::Empty(PromptKind::PatternExtraction));
    }
    priors.text = text.to_owned();
    priors.summaries.push(summary);
    priors.version += 1;
    Ok(())
}
