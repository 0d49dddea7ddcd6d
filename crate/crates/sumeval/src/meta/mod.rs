//! Agreement measurement between a predicted evaluation and gold judgments:
//! sentence-level balanced accuracy, summary-level correlations, system-level
//! rank correlation, error-localization accuracy, agreement coefficients, and
//! inter-run stability.

pub mod agreement;
pub mod correlation;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{cohen_kappa, krippendorff_alpha_interval, krippendorff_alpha_nominal};
pub use correlation::{fractional_ranks, pearson, permutation_p_value, spearman, Statistic};

use crate::model::{ErrorCategory, Fraction, ScoreTriple};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 3 pairs, got {got}")]
    TooFewPairs { got: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("all ranks tied: rank correlation undefined")]
    ZeroRankVariance,
    #[error("permutation test needs at least 100 permutations, got {got}")]
    TooFewPermutations { got: usize },
    #[error("degenerate gold: both classes must be present")]
    DegenerateGold,
    #[error("empty input")]
    EmptyInput,
    #[error("kappa undefined: expected agreement is 1")]
    UndefinedKappa,
    #[error("no pairable values: need at least two ratings on some item")]
    NoPairableValues,
    #[error("need at least 3 systems, got {got}")]
    TooFewSystems { got: usize },
    #[error("system sets differ between predicted and gold scores")]
    MismatchedSystems,
    #[error("no sentences with a specific gold error category")]
    NoGoldErrorCategories,
    #[error("runs cover different instance sets")]
    MismatchedInstanceSets,
}

/// Confusion counts for a binary error-detection decision. "Positive" is
/// "has an error".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryClassificationCounts {
    pub true_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
    pub false_positives: u64,
}

impl BinaryClassificationCounts {
    pub fn sensitivity(&self) -> Option<Fraction> {
        let denom = self.true_positives + self.false_negatives;
        (denom > 0).then(|| Fraction::new(self.true_positives, denom))
    }

    pub fn specificity(&self) -> Option<Fraction> {
        let denom = self.true_negatives + self.false_positives;
        (denom > 0).then(|| Fraction::new(self.true_negatives, denom))
    }
}

/// Balanced accuracy `(sensitivity + specificity) / 2` in exact rational
/// arithmetic. The gold vector must contain both classes.
pub fn balanced_accuracy(
    pred: &[bool],
    gold: &[bool],
) -> Result<(Fraction, BinaryClassificationCounts), MetaError> {
    if pred.len() != gold.len() {
        return Err(MetaError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetaError::EmptyInput);
    }
    let mut counts = BinaryClassificationCounts::default();
    for (&p, &g) in pred.iter().zip(gold) {
        match (g, p) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_negatives += 1,
            (false, false) => counts.true_negatives += 1,
            (false, true) => counts.false_positives += 1,
        }
    }
    let (Some(sens), Some(spec)) = (counts.sensitivity(), counts.specificity()) else {
        return Err(MetaError::DegenerateGold);
    };
    // (a/b + c/d) / 2 = (a*d + c*b) / (2*b*d)
    let num =
        sens.numerator() * spec.denominator() + spec.numerator() * sens.denominator();
    let den = 2 * sens.denominator() * spec.denominator();
    Ok((Fraction::new(num, den), counts))
}

/// One system's mean score on both sides, with its fractional rank
/// (rank 1 = highest mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub system_id: String,
    pub pred_mean: f64,
    pub gold_mean: f64,
    pub pred_rank: f64,
    pub gold_rank: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRankReport {
    pub rank_correlation: f64,
    pub systems: Vec<SystemRow>,
}

/// Per-instance score attributed to the summarization system that produced
/// the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScore {
    pub system_id: String,
    pub score: f64,
}

/// Ranks systems by mean score on each side and returns the Spearman
/// correlation between the two rankings.
pub fn system_rank_correlation(
    pred: &[SystemScore],
    gold: &[SystemScore],
) -> Result<SystemRankReport, MetaError> {
    fn means(scores: &[SystemScore]) -> BTreeMap<String, (f64, usize)> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for s in scores {
            let entry = acc.entry(s.system_id.clone()).or_insert((0.0, 0));
            entry.0 += s.score;
            entry.1 += 1;
        }
        acc.into_iter()
            .map(|(id, (sum, count))| (id, (sum / count as f64, count)))
            .collect()
    }

    let pred_means = means(pred);
    let gold_means = means(gold);
    if pred_means.keys().ne(gold_means.keys()) {
        return Err(MetaError::MismatchedSystems);
    }
    if pred_means.len() < 3 {
        return Err(MetaError::TooFewSystems {
            got: pred_means.len(),
        });
    }

    let ids: Vec<&String> = pred_means.keys().collect();
    // Negate so rank 1 lands on the highest mean.
    let pred_vals: Vec<f64> = ids.iter().map(|id| -pred_means[*id].0).collect();
    let gold_vals: Vec<f64> = ids.iter().map(|id| -gold_means[*id].0).collect();
    let pred_ranks = fractional_ranks(&pred_vals);
    let gold_ranks = fractional_ranks(&gold_vals);
    let rank_correlation = pearson(&pred_ranks, &gold_ranks).map_err(|e| match e {
        MetaError::ZeroVariance => MetaError::ZeroRankVariance,
        other => other,
    })?;

    let mut systems: Vec<SystemRow> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| SystemRow {
            system_id: (*id).clone(),
            pred_mean: pred_means[*id].0,
            gold_mean: gold_means[*id].0,
            pred_rank: pred_ranks[i],
            gold_rank: gold_ranks[i],
            instances: pred_means[*id].1,
        })
        .collect();
    systems.sort_by(|a, b| {
        a.gold_rank
            .partial_cmp(&b.gold_rank)
            .unwrap()
            .then_with(|| a.system_id.cmp(&b.system_id))
    });
    Ok(SystemRankReport {
        rank_correlation,
        systems,
    })
}

/// Per-category error-localization accuracy over sentences whose gold label
/// is one of the seven specific error types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// Accuracy per gold category; `None` when no gold sentence has it.
    pub per_category: BTreeMap<String, Option<Fraction>>,
    /// Unweighted mean over the categories present.
    pub mean: f64,
    /// Rows: the seven gold error types; columns: all nine predicted
    /// categories, both in taxonomy order.
    pub confusion: Vec<Vec<u64>>,
    pub total_sentences: usize,
}

/// Computes localization accuracy. Pairs whose gold category is NoError or
/// OtherE are excluded; empty categories are reported as n/a and excluded
/// from the mean.
pub fn error_localization_accuracy(
    pred: &[ErrorCategory],
    gold: &[ErrorCategory],
) -> Result<LocalizationReport, MetaError> {
    if pred.len() != gold.len() {
        return Err(MetaError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let rows = ErrorCategory::SPECIFIC_ERRORS;
    let cols = ErrorCategory::ALL;
    let row_index: BTreeMap<ErrorCategory, usize> =
        rows.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let col_index: BTreeMap<ErrorCategory, usize> =
        cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut confusion = vec![vec![0u64; cols.len()]; rows.len()];
    let mut total = 0usize;
    for (&p, &g) in pred.iter().zip(gold) {
        let Some(&r) = row_index.get(&g) else {
            continue;
        };
        confusion[r][col_index[&p]] += 1;
        total += 1;
    }

    let mut per_category = BTreeMap::new();
    let mut present = Vec::new();
    for (r, &category) in rows.iter().enumerate() {
        let row_total: u64 = confusion[r].iter().sum();
        let accuracy = if row_total == 0 {
            None
        } else {
            let correct = confusion[r][col_index[&category]];
            let f = Fraction::new(correct, row_total);
            present.push(f.value());
            Some(f)
        };
        per_category.insert(category.code().to_string(), accuracy);
    }
    if present.is_empty() {
        return Err(MetaError::NoGoldErrorCategories);
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Ok(LocalizationReport {
        per_category,
        mean,
        confusion,
        total_sentences: total,
    })
}

/// Per-dimension inter-run agreement over repeated evaluation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Interval-metric Krippendorff's alpha per dimension, `None` when a
    /// dimension is absent from every run.
    pub alpha: BTreeMap<String, Option<f64>>,
    /// Largest absolute score difference between any two runs on any
    /// instance, per dimension.
    pub max_pairwise_delta: BTreeMap<String, f64>,
    pub runs: usize,
    pub instances: usize,
}

/// Treats each run as a rater over instances and measures agreement of the
/// percentage scores with the interval metric.
pub fn stability_report(
    runs: &[Vec<(String, ScoreTriple)>],
) -> Result<StabilityReport, MetaError> {
    if runs.len() < 2 {
        return Err(MetaError::NoPairableValues);
    }
    let reference: Vec<&String> = runs[0].iter().map(|(id, _)| id).collect();
    for run in &runs[1..] {
        let ids: Vec<&String> = run.iter().map(|(id, _)| id).collect();
        if ids != reference {
            return Err(MetaError::MismatchedInstanceSets);
        }
    }

    type DimensionGetter = fn(&ScoreTriple) -> Option<Fraction>;
    let dims: [(&str, DimensionGetter); 3] = [
        ("faithfulness", |t| t.faithfulness),
        ("completeness", |t| t.completeness),
        ("conciseness", |t| t.conciseness),
    ];

    let mut alpha = BTreeMap::new();
    let mut max_pairwise_delta = BTreeMap::new();
    for (name, getter) in dims {
        let matrix: Vec<Vec<Option<f64>>> = runs
            .iter()
            .map(|run| {
                run.iter()
                    .map(|(_, t)| getter(t).map(|f| f.value()))
                    .collect()
            })
            .collect();
        let any_rating = matrix.iter().flatten().any(Option::is_some);
        let value = if any_rating {
            Some(krippendorff_alpha_interval(&matrix)?)
        } else {
            None
        };
        alpha.insert(name.to_string(), value);

        let mut max_delta = 0.0f64;
        for item in 0..reference.len() {
            for a in 0..runs.len() {
                for b in (a + 1)..runs.len() {
                    if let (Some(Some(x)), Some(Some(y))) =
                        (matrix[a].get(item), matrix[b].get(item))
                    {
                        max_delta = max_delta.max((x - y).abs());
                    }
                }
            }
        }
        max_pairwise_delta.insert(name.to_string(), max_delta);
    }

    Ok(StabilityReport {
        alpha,
        max_pairwise_delta,
        runs: runs.len(),
        instances: reference.len(),
    })
}
