//! Dataset loading, Hits@1 / F1 scoring and batch evaluation.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::engine::{Question, Reasoner};
use crate::memory::ExplorationPriors;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("line {line}: duplicate example id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("gold answer set is empty")]
    EmptyGold,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QAExample {
    pub id: String,
    pub question: String,
    pub topic_entities: Vec<String>,
    pub answers: Vec<String>,
}

impl QAExample {
    pub fn to_question(&self) -> Question {
        Question {
            id: self.id.clone(),
            text: self.question.clone(),
            topics: self.topic_entities.clone(),
        }
    }
}

/// Reads one JSON object per line. Blank lines are skipped.
pub fn load_dataset<R: BufRead>(reader: R) -> Result<Vec<QAExample>, EvalError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let example: QAExample = serde_json::from_str(&line).map_err(|e| EvalError::Schema {
            line: lineno,
            reason: e.to_string(),
        })?;
        if example.topic_entities.is_empty() {
            return Err(EvalError::Schema {
                line: lineno,
                reason: "topic_entities is empty".into(),
            });
        }
        if example.answers.is_empty() {
            return Err(EvalError::Schema {
                line: lineno,
                reason: "answers is empty".into(),
            });
        }
        if !ids.insert(example.id.clone()) {
            return Err(EvalError::DuplicateId {
                line: lineno,
                id: example.id,
            });
        }
        out.push(example);
    }
    Ok(out)
}

pub fn load_dataset_path(path: impl AsRef<Path>) -> Result<Vec<QAExample>, EvalError> {
    let file = std::fs::File::open(path)?;
    load_dataset(std::io::BufReader::new(file))
}

/// Uniform sample of `n` examples without replacement, kept in file order.
pub fn sample(examples: &[QAExample], n: usize, seed: u64) -> Vec<QAExample> {
    if n >= examples.len() {
        return examples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, examples.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| examples[i].clone()).collect()
}

fn normalize(s: &str) -> String {
    s.nfc().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HitsMode {
    /// Only the first predicted entity counts.
    #[default]
    Strict,
    /// Any predicted entity in the gold set counts.
    Any,
}

pub fn hits_at_1<S: AsRef<str>, G: AsRef<str>>(predicted: &[S], gold: &[G], mode: HitsMode) -> u8 {
    let gold: BTreeSet<String> = gold.iter().map(|g| normalize(g.as_ref())).collect();
    let hit = match mode {
        HitsMode::Strict => predicted.first().is_some_and(|p| gold.contains(&normalize(p.as_ref()))),
        HitsMode::Any => predicted.iter().any(|p| gold.contains(&normalize(p.as_ref()))),
    };
    u8::from(hit)
}

/// Set F1 between predicted and gold entities.
pub fn f1<S: AsRef<str>, G: AsRef<str>>(predicted: &[S], gold: &[G]) -> Result<f64, EvalError> {
    let gold: BTreeSet<String> = gold.iter().map(|g| normalize(g.as_ref())).collect();
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let pred: BTreeSet<String> = predicted.iter().map(|p| normalize(p.as_ref())).collect();
    if pred.is_empty() {
        return Ok(0.0);
    }
    let overlap = pred.intersection(&gold).count() as f64;
    let precision = overlap / pred.len() as f64;
    let recall = overlap / gold.len() as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub question: String,
    pub predicted: Vec<String>,
    pub hits: u8,
    pub f1: f64,
    pub calls: u64,
    pub tokens: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub questions: usize,
    pub errors: usize,
    /// Percentages and means, rounded to one decimal.
    pub hits_at_1: f64,
    pub f1: f64,
    pub mean_calls: f64,
    pub mean_tokens: f64,
}

impl Aggregates {
    pub fn from_rows(rows: &[EvalRow]) -> Self {
        let n = rows.len();
        let mean = |f: &dyn Fn(&EvalRow) -> f64| {
            if n == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Self {
            questions: n,
            errors: rows.iter().filter(|r| r.error.is_some()).count(),
            hits_at_1: round1(100.0 * mean(&|r| f64::from(r.hits))),
            f1: round1(100.0 * mean(&|r| r.f1)),
            mean_calls: round1(mean(&|r| r.calls as f64)),
            mean_tokens: round1(mean(&|r| r.tokens as f64)),
        }
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Effective configuration of the run, echoed for reproducibility.
    pub config: serde_json::Value,
    pub rows: Vec<EvalRow>,
    pub aggregates: Aggregates,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>6} {:>6} {:>8}  predicted",
            "id", "hits", "f1", "calls", "tokens"
        );
        for r in &self.rows {
            let predicted = match &r.error {
                Some(e) => format!("error: {e}"),
                None => r.predicted.join(", "),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>5} {:>6.3} {:>6} {:>8}  {}",
                r.id, r.hits, r.f1, r.calls, r.tokens, predicted
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "\nquestions {}  errors {}  Hits@1 {:.1}  F1 {:.1}  calls/q {:.1}  tokens/q {:.1}",
            a.questions, a.errors, a.hits_at_1, a.f1, a.mean_calls, a.mean_tokens
        );
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub hits_mode: HitsMode,
    /// Worker threads; 0 or 1 runs sequentially.
    pub parallel: usize,
    /// Starting priors for every question.
    pub priors: Option<ExplorationPriors>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    /// Per-question JSON-lines trace, in report row order.
    pub traces: Vec<(String, String)>,
}

impl EvalOutcome {
    pub fn trace_jsonl(&self) -> String {
        self.traces.iter().map(|(_, t)| t.as_str()).collect()
    }
}

fn evaluate_one(reasoner: &Reasoner<'_>, example: &QAExample, options: &EvalOptions) -> (EvalRow, String) {
    let priors = options.priors.clone().unwrap_or_default();
    let mut row = EvalRow {
        id: example.id.clone(),
        question: example.question.clone(),
        predicted: Vec::new(),
        hits: 0,
        f1: 0.0,
        calls: 0,
        tokens: 0,
        error: None,
    };
    match reasoner.answer_with_priors(&example.to_question(), priors) {
        Ok(outcome) => {
            row.hits = hits_at_1(&outcome.answer.entities, &example.answers, options.hits_mode);
            row.f1 = f1(&outcome.answer.entities, &example.answers).expect("dataset answers are non-empty");
            row.calls = outcome.ledger.llm_calls;
            row.tokens = outcome.ledger.total_tokens;
            row.predicted = outcome.answer.entities.clone();
            (row, outcome.trace_jsonl())
        }
        Err(e) => {
            row.error = Some(e.to_string());
            (row, String::new())
        }
    }
}

/// Answers every example and scores it. Failures become zero-scored rows.
/// Rows are ordered by example id regardless of worker count.
pub fn run_eval(
    dataset: &[QAExample],
    reasoner: &Reasoner<'_>,
    config: serde_json::Value,
    options: &EvalOptions,
) -> EvalOutcome {
    let mut results: Vec<(EvalRow, String)> = if options.parallel <= 1 {
        dataset.iter().map(|ex| evaluate_one(reasoner, ex, options)).collect()
    } else {
        let next = AtomicUsize::new(0);
        let collected = Mutex::new(Vec::with_capacity(dataset.len()));
        std::thread::scope(|scope| {
            for _ in 0..options.parallel.min(dataset.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(example) = dataset.get(i) else { break };
                    let result = evaluate_one(reasoner, example, options);
                    collected.lock().expect("eval worker panicked").push(result);
                });
            }
        });
        collected.into_inner().expect("eval worker panicked")
    };
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let traces = results.iter().map(|(r, t)| (r.id.clone(), t.clone())).collect();
    let rows: Vec<EvalRow> = results.into_iter().map(|(r, _)| r).collect();
    let aggregates = Aggregates::from_rows(&rows);
    EvalOutcome {
        report: EvalReport {
            config,
            rows,
            aggregates,
        },
        traces,
    }
}
