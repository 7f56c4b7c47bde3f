//! Natural-language narratives for partial relation sequences.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::llm::prompt::relation_set_literal;
use crate::llm::{BudgetLedger, Gateway, GatewayError, PromptKind};
use crate::trajectory::RelationSequence;

/// Narrative used before any relation has been chosen.
pub const START_NARRATIVE: &str = "This is the start of the path.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NarratorError {
    #[error("context generation returned an empty narrative")]
    Empty,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Narrative {
    pub text: String,
    /// Sequence length the narrative was generated for.
    pub for_step: usize,
}

pub fn generate_context(
    question: &str,
    sequence: &RelationSequence,
    gateway: &Gateway,
    ledger: &mut BudgetLedger,
) -> Result<Narrative, NarratorError> {
    if sequence.is_empty() {
        return Ok(Narrative {
            text: START_NARRATIVE.to_owned(),
            for_step: 0,
        });
    }
    let fields = BTreeMap::from([
        ("question", question.to_owned()),
        ("relations_list", relation_set_literal(sequence.relations())),
    ]);
    let result = gateway.ask(PromptKind::ContextGeneration, &fields, ledger)?;
    let text = unquote(result.text.trim());
    if text.is_empty() {
        return Err(NarratorError::Empty);
    }
    Ok(Narrative {
        text: text.to_owned(),
        for_step: sequence.len(),
    })
}

/// Strips one pair of enclosing double quotes, as in the template's examples.
pub(crate) fn unquote(text: &str) -> &str {
    text.strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .map(str::trim)
        .unwrap_or(text)
}
