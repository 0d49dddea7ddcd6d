//! The three percentage scores, computed as exact fractions over N and M.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AlignmentGraph, FactCheckVerdict, Fraction, Provenance, ScoreTriple};
use crate::parser::ParseOutcome;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("verdicts must cover sentence indices 1..={expected}, got {got} entries")]
    VerdictCoverage { expected: usize, got: usize },
    #[error("alignment must cover keyfact indices 1..={expected}, got {got} entries")]
    AlignmentCoverage { expected: usize, got: usize },
}

/// Which of the two tasks a run is configured to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    pub fact_check: bool,
    pub alignment: bool,
}

impl TaskSet {
    pub fn both() -> Self {
        Self {
            fact_check: true,
            alignment: true,
        }
    }

    pub fn fact_check_only() -> Self {
        Self {
            fact_check: true,
            alignment: false,
        }
    }

    pub fn alignment_only() -> Self {
        Self {
            fact_check: false,
            alignment: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.fact_check && !self.alignment
    }
}

fn check_verdict_coverage(verdicts: &[FactCheckVerdict], n: usize) -> Result<(), ScoringError> {
    let covers = verdicts.len() == n
        && verdicts
            .iter()
            .enumerate()
            .all(|(i, v)| v.sentence_index == i + 1);
    if covers {
        Ok(())
    } else {
        Err(ScoringError::VerdictCoverage {
            expected: n,
            got: verdicts.len(),
        })
    }
}

/// Fraction of the N summary sentences with no factuality error.
pub fn faithfulness(verdicts: &[FactCheckVerdict], n: usize) -> Result<Fraction, ScoringError> {
    assert!(n >= 1, "faithfulness requires N >= 1");
    check_verdict_coverage(verdicts, n)?;
    let correct = verdicts.iter().filter(|v| !v.has_error()).count();
    Ok(Fraction::new(correct as u64, n as u64))
}

fn check_alignment_coverage(graph: &AlignmentGraph, m: usize) -> Result<(), ScoringError> {
    let covers = graph.entries.len() == m
        && graph
            .entries
            .iter()
            .enumerate()
            .all(|(i, e)| e.keyfact_index == i + 1);
    if covers {
        Ok(())
    } else {
        Err(ScoringError::AlignmentCoverage {
            expected: m,
            got: graph.entries.len(),
        })
    }
}

/// Fraction of the M keyfacts carrying a "Yes" match label. The binary label
/// decides: a matched keyfact with an empty line set still counts.
pub fn completeness(graph: &AlignmentGraph, m: usize) -> Result<Fraction, ScoringError> {
    assert!(m >= 1, "completeness requires M >= 1");
    check_alignment_coverage(graph, m)?;
    Ok(Fraction::new(graph.matched_count() as u64, m as u64))
}

/// Fraction of the N summary sentences aligned to at least one keyfact
/// (unique sentences over the edge set).
pub fn conciseness(graph: &AlignmentGraph, n: usize) -> Result<Fraction, ScoringError> {
    assert!(n >= 1, "conciseness requires N >= 1");
    let aligned = graph.aligned_sentences();
    assert!(
        aligned.iter().all(|&s| s >= 1 && s <= n),
        "alignment line numbers must be pre-validated to 1..=N"
    );
    Ok(Fraction::new(aligned.len() as u64, n as u64))
}

/// Combines parsed task outcomes into the instance score triple. Any
/// required outcome that is missing or failed, or a degenerate summary
/// (N = 0), yields the failure-default triple.
pub fn score_instance(
    fact_outcome: Option<&ParseOutcome<Vec<FactCheckVerdict>>>,
    align_outcome: Option<&ParseOutcome<AlignmentGraph>>,
    n: usize,
    m: usize,
    task_set: TaskSet,
) -> ScoreTriple {
    assert!(!task_set.is_empty(), "task set must not be empty");
    if n == 0 {
        return ScoreTriple::failure_default();
    }

    let verdicts = if task_set.fact_check {
        match fact_outcome.and_then(|o| o.payload()) {
            Some(v) => Some(v),
            None => return ScoreTriple::failure_default(),
        }
    } else {
        None
    };
    let graph = if task_set.alignment {
        if m == 0 {
            return ScoreTriple::failure_default();
        }
        match align_outcome.and_then(|o| o.payload()) {
            Some(g) => Some(g),
            None => return ScoreTriple::failure_default(),
        }
    } else {
        None
    };

    let faithfulness_score = match verdicts {
        Some(v) => match faithfulness(v, n) {
            Ok(f) => Some(f),
            Err(_) => return ScoreTriple::failure_default(),
        },
        None => None,
    };
    let (completeness_score, conciseness_score) = match graph {
        Some(g) => {
            let comp = match completeness(g, m) {
                Ok(f) => f,
                Err(_) => return ScoreTriple::failure_default(),
            };
            (Some(comp), Some(conciseness(g, n).unwrap_or(Fraction::ZERO)))
        }
        None => (None, None),
    };

    ScoreTriple {
        faithfulness: faithfulness_score,
        completeness: completeness_score,
        conciseness: conciseness_score,
        provenance: Provenance::Computed,
    }
}
