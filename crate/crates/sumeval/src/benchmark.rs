//! Joins predicted results with gold annotations and assembles the
//! agreement report.
//!
//! Strict-mode inclusion: instances whose required task replies failed to
//! parse are excluded from agreement statistics and listed with reasons;
//! they still count against the success ratio. A flag can pull them back
//! into the summary-level statistics with their failure-default scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta::{
    balanced_accuracy, cohen_kappa, error_localization_accuracy, krippendorff_alpha_nominal,
    pearson, permutation_p_value, spearman, system_rank_correlation,
    BinaryClassificationCounts, LocalizationReport, MetaError, StabilityReport, Statistic,
    SystemRankReport, SystemScore,
};
use crate::model::{ErrorCategory, Fraction, GoldAnnotations};
use crate::parser::{success_ratio, ParseSummary};
use crate::pipeline::{ResultsRow, SuccessRatioOut};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("join error: gold row references unknown instance_id {instance_id:?}")]
    Join { instance_id: String },
    #[error("shape error for instance {instance_id:?}: {message}")]
    Shape {
        instance_id: String,
        message: String,
    },
    #[error("no instances to benchmark")]
    Empty,
    #[error(transparent)]
    Meta(#[from] MetaError),
}

/// The measurement levels a benchmark can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Sentence,
    Summary,
    System,
    Localization,
    Agreement,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::Sentence,
        Level::Summary,
        Level::System,
        Level::Localization,
        Level::Agreement,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Sentence => "sentence",
            Level::Summary => "summary",
            Level::System => "system",
            Level::Localization => "localization",
            Level::Agreement => "agreement",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "sentence" => Ok(Level::Sentence),
            "summary" => Ok(Level::Summary),
            "system" => Ok(Level::System),
            "localization" => Ok(Level::Localization),
            "agreement" => Ok(Level::Agreement),
            other => Err(format!("unknown level {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    pub levels: BTreeSet<Level>,
    pub permutations: usize,
    pub seed: u64,
    /// Include parse-failed instances in summary-level statistics with
    /// their failure-default scores (sensitivity analysis).
    pub include_failures: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            levels: Level::ALL.into_iter().collect(),
            permutations: 1000,
            seed: 0,
            include_failures: false,
        }
    }
}

/// A float paired with its exact rational form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalValue {
    pub value: f64,
    pub exact: Fraction,
}

impl From<Fraction> for RationalValue {
    fn from(exact: Fraction) -> Self {
        Self {
            value: exact.value(),
            exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceLevelReport {
    pub balanced_accuracy: Option<RationalValue>,
    pub counts: BinaryClassificationCounts,
    pub sentences: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionCorrelation {
    pub pearson: Option<f64>,
    pub pearson_p: Option<f64>,
    pub spearman: Option<f64>,
    pub spearman_p: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemLevelReport {
    pub report: Option<SystemRankReport>,
    pub systems: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub keyfact_cohen_kappa: Option<f64>,
    pub keyfact_krippendorff_alpha: Option<f64>,
    pub pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedInstance {
    pub instance_id: String,
    pub reason: String,
}

/// Resolved options echoed into the report so reruns are auditable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkConfigEcho {
    pub levels: Vec<String>,
    pub permutations: usize,
    pub seed: u64,
    pub include_failures: bool,
}

/// The assembled agreement statistics between predicted and gold judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub config: BenchmarkConfigEcho,
    pub instances: usize,
    pub included_instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence_level: Option<SentenceLevelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_level: Option<BTreeMap<String, DimensionCorrelation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system_level: Option<BTreeMap<String, SystemLevelReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_localization: Option<LocalizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
    /// Inter-run agreement, present when multiple results files were given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    pub success_ratio: BTreeMap<String, SuccessRatioOut>,
    pub excluded_instances: Vec<ExcludedInstance>,
}

struct Joined<'a> {
    row: &'a ResultsRow,
    gold: &'a GoldAnnotations,
}

fn parse_failure_reason(row: &ResultsRow) -> Option<String> {
    let mut parts = Vec::new();
    if let Some(summary) = &row.parse.fact_check {
        if !summary.is_ok() {
            parts.push(format!(
                "fact_check: {}",
                summary.reason.map_or("failed", |r| r.as_str())
            ));
        }
    }
    if let Some(summary) = &row.parse.alignment {
        if !summary.is_ok() {
            parts.push(format!(
                "alignment: {}",
                summary.reason.map_or("failed", |r| r.as_str())
            ));
        }
    }
    if row.scores.provenance == crate::model::Provenance::FailureDefault && parts.is_empty() {
        parts.push("failure-default scores".to_string());
    }
    (!parts.is_empty()).then(|| parts.join("; "))
}

/// Gold percentage scores derived from the annotations by the same counting
/// rules the evaluator uses.
fn gold_scores(
    gold: &GoldAnnotations,
    n_hint: Option<usize>,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let faithfulness = gold.sentence_labels.as_ref().map(|labels| {
        let fine = labels.iter().filter(|l| !l.has_error).count();
        fine as f64 / labels.len() as f64
    });
    let completeness = gold.keyfact_labels.as_ref().map(|labels| {
        let matched = labels.iter().filter(|l| l.matched).count();
        matched as f64 / labels.len() as f64
    });
    let conciseness = gold.keyfact_labels.as_ref().and_then(|labels| {
        let n = gold
            .sentence_labels
            .as_ref()
            .map(Vec::len)
            .or(n_hint)?;
        if n == 0 {
            return None;
        }
        let mut lines: BTreeSet<usize> = BTreeSet::new();
        for label in labels {
            lines.extend(label.line_numbers.as_ref()?.iter().copied());
        }
        Some(lines.len() as f64 / n as f64)
    });
    (faithfulness, completeness, conciseness)
}

/// Computes the requested agreement statistics over predicted results and
/// gold annotations joined by instance_id.
pub fn compute_benchmark(
    pred: &[ResultsRow],
    gold: &HashMap<String, GoldAnnotations>,
    opts: &BenchmarkOptions,
) -> Result<MetaReport, BenchmarkError> {
    if pred.is_empty() {
        return Err(BenchmarkError::Empty);
    }
    let known: BTreeSet<&str> = pred.iter().map(|r| r.instance_id.as_str()).collect();
    if let Some(unknown) = gold.keys().find(|id| !known.contains(id.as_str())) {
        return Err(BenchmarkError::Join {
            instance_id: unknown.clone(),
        });
    }

    let mut excluded = Vec::new();
    let mut included: Vec<Joined> = Vec::new();
    // Failure-default rows pulled back in when include_failures is set;
    // usable only for score-level statistics.
    let mut failure_rows: Vec<Joined> = Vec::new();
    for row in pred {
        let Some(gold_ann) = gold.get(&row.instance_id) else {
            excluded.push(ExcludedInstance {
                instance_id: row.instance_id.clone(),
                reason: "no gold annotations".into(),
            });
            continue;
        };
        match parse_failure_reason(row) {
            Some(reason) => {
                excluded.push(ExcludedInstance {
                    instance_id: row.instance_id.clone(),
                    reason,
                });
                if opts.include_failures {
                    failure_rows.push(Joined {
                        row,
                        gold: gold_ann,
                    });
                }
            }
            None => included.push(Joined {
                row,
                gold: gold_ann,
            }),
        }
    }

    let sentence_level = opts
        .levels
        .contains(&Level::Sentence)
        .then(|| compute_sentence_level(&included))
        .transpose()?;
    let summary_level = if opts.levels.contains(&Level::Summary) {
        let mut rows: Vec<&Joined> = included.iter().collect();
        rows.extend(failure_rows.iter());
        Some(compute_summary_level(&rows, opts))
    } else {
        None
    };
    let system_level = if opts.levels.contains(&Level::System) {
        let mut rows: Vec<&Joined> = included.iter().collect();
        rows.extend(failure_rows.iter());
        Some(compute_system_level(&rows))
    } else {
        None
    };
    let error_localization = if opts.levels.contains(&Level::Localization) {
        compute_localization(&included)?
    } else {
        None
    };
    let agreement = opts
        .levels
        .contains(&Level::Agreement)
        .then(|| compute_agreement(&included))
        .transpose()?;

    // Success ratios cover every predicted row, not just the included ones.
    let mut fact: Vec<ParseSummary> = Vec::new();
    let mut align: Vec<ParseSummary> = Vec::new();
    for row in pred {
        if let Some(s) = row.parse.fact_check {
            fact.push(s);
        }
        if let Some(s) = row.parse.alignment {
            align.push(s);
        }
    }
    let mut ratio_out = BTreeMap::new();
    let mut insert = |name: &str, outcomes: &[ParseSummary]| {
        if outcomes.is_empty() {
            return;
        }
        ratio_out.insert(
            name.to_string(),
            SuccessRatioOut {
                ok: outcomes.iter().filter(|o| o.is_ok()).count(),
                total: outcomes.len(),
                ratio: success_ratio(outcomes).ok(),
            },
        );
    };
    insert("fact_check", &fact);
    insert("alignment", &align);
    let all: Vec<ParseSummary> = fact.iter().chain(align.iter()).copied().collect();
    insert("overall", &all);

    Ok(MetaReport {
        config: BenchmarkConfigEcho {
            levels: opts.levels.iter().map(|l| l.to_string()).collect(),
            permutations: opts.permutations,
            seed: opts.seed,
            include_failures: opts.include_failures,
        },
        instances: pred.len(),
        included_instances: included.len(),
        sentence_level,
        summary_level,
        system_level,
        error_localization,
        agreement,
        stability: None,
        success_ratio: ratio_out,
        excluded_instances: excluded,
    })
}

fn compute_sentence_level(rows: &[Joined]) -> Result<SentenceLevelReport, BenchmarkError> {
    let mut pred_flags = Vec::new();
    let mut gold_flags = Vec::new();
    for joined in rows {
        let (Some(verdicts), Some(labels)) =
            (joined.row.typed_verdicts(), &joined.gold.sentence_labels)
        else {
            continue;
        };
        if verdicts.len() != labels.len() {
            return Err(BenchmarkError::Shape {
                instance_id: joined.row.instance_id.clone(),
                message: format!(
                    "{} predicted verdicts vs {} gold sentence labels",
                    verdicts.len(),
                    labels.len()
                ),
            });
        }
        let mut sorted: Vec<_> = labels.iter().collect();
        sorted.sort_by_key(|l| l.index);
        for (verdict, label) in verdicts.iter().zip(sorted) {
            pred_flags.push(verdict.has_error());
            gold_flags.push(label.has_error);
        }
    }
    let sentences = pred_flags.len();
    match balanced_accuracy(&pred_flags, &gold_flags) {
        Ok((bacc, counts)) => Ok(SentenceLevelReport {
            balanced_accuracy: Some(bacc.into()),
            counts,
            sentences,
            note: None,
        }),
        Err(e) => Ok(SentenceLevelReport {
            balanced_accuracy: None,
            counts: BinaryClassificationCounts::default(),
            sentences,
            note: Some(e.to_string()),
        }),
    }
}

const DIMENSIONS: [&str; 3] = ["faithfulness", "completeness", "conciseness"];

fn paired_scores(rows: &[&Joined], dimension: &str) -> (Vec<f64>, Vec<f64>) {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for joined in rows {
        let n_hint = joined.row.verdicts.as_ref().map(Vec::len);
        let (gf, gc, gz) = gold_scores(joined.gold, n_hint);
        let (p, g) = match dimension {
            "faithfulness" => (joined.row.scores.faithfulness, gf),
            "completeness" => (joined.row.scores.completeness, gc),
            _ => (joined.row.scores.conciseness, gz),
        };
        if let (Some(p), Some(g)) = (p, g) {
            pred.push(p);
            gold.push(g);
        }
    }
    (pred, gold)
}

fn compute_summary_level(
    rows: &[&Joined],
    opts: &BenchmarkOptions,
) -> BTreeMap<String, DimensionCorrelation> {
    let mut out = BTreeMap::new();
    for dimension in DIMENSIONS {
        let (pred, gold) = paired_scores(rows, dimension);
        let n = pred.len();
        let mut entry = DimensionCorrelation {
            n,
            ..DimensionCorrelation::default()
        };
        match pearson(&pred, &gold) {
            Ok(r) => {
                entry.pearson = Some(r);
                entry.pearson_p =
                    permutation_p_value(&pred, &gold, Statistic::Pearson, opts.permutations, opts.seed)
                        .ok();
            }
            Err(e) => entry.note = Some(e.to_string()),
        }
        match spearman(&pred, &gold) {
            Ok(r) => {
                entry.spearman = Some(r);
                entry.spearman_p = permutation_p_value(
                    &pred,
                    &gold,
                    Statistic::Spearman,
                    opts.permutations,
                    opts.seed,
                )
                .ok();
            }
            Err(e) => {
                if entry.note.is_none() {
                    entry.note = Some(e.to_string());
                }
            }
        }
        out.insert(dimension.to_string(), entry);
    }
    out
}

fn compute_system_level(rows: &[&Joined]) -> BTreeMap<String, SystemLevelReport> {
    let mut out = BTreeMap::new();
    for dimension in DIMENSIONS {
        let mut pred_scores = Vec::new();
        let mut gold_scores_v = Vec::new();
        for joined in rows {
            let n_hint = joined.row.verdicts.as_ref().map(Vec::len);
            let (gf, gc, gz) = gold_scores(joined.gold, n_hint);
            let (p, g) = match dimension {
                "faithfulness" => (joined.row.scores.faithfulness, gf),
                "completeness" => (joined.row.scores.completeness, gc),
                _ => (joined.row.scores.conciseness, gz),
            };
            if let (Some(p), Some(g)) = (p, g) {
                pred_scores.push(SystemScore {
                    system_id: joined.row.system_id.clone(),
                    score: p,
                });
                gold_scores_v.push(SystemScore {
                    system_id: joined.row.system_id.clone(),
                    score: g,
                });
            }
        }
        let systems: BTreeSet<&str> = pred_scores
            .iter()
            .map(|s| s.system_id.as_str())
            .collect();
        let entry = match system_rank_correlation(&pred_scores, &gold_scores_v) {
            Ok(report) => SystemLevelReport {
                report: Some(report),
                systems: systems.len(),
                note: None,
            },
            Err(e) => SystemLevelReport {
                report: None,
                systems: systems.len(),
                note: Some(e.to_string()),
            },
        };
        out.insert(dimension.to_string(), entry);
    }
    out
}

fn compute_localization(rows: &[Joined]) -> Result<Option<LocalizationReport>, BenchmarkError> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for joined in rows {
        let (Some(verdicts), Some(labels)) =
            (joined.row.typed_verdicts(), &joined.gold.sentence_labels)
        else {
            continue;
        };
        let by_index: BTreeMap<usize, ErrorCategory> = labels
            .iter()
            .filter_map(|l| l.category.map(|c| (l.index, c)))
            .collect();
        for verdict in &verdicts {
            if let Some(&gold_cat) = by_index.get(&verdict.sentence_index) {
                pred.push(verdict.category);
                gold.push(gold_cat);
            }
        }
    }
    if pred.is_empty() {
        return Ok(None);
    }
    match error_localization_accuracy(&pred, &gold) {
        Ok(report) => Ok(Some(report)),
        Err(MetaError::NoGoldErrorCategories) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn compute_agreement(rows: &[Joined]) -> Result<AgreementReport, BenchmarkError> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for joined in rows {
        let (Some(alignment), Some(labels)) =
            (&joined.row.alignment, &joined.gold.keyfact_labels)
        else {
            continue;
        };
        if alignment.len() != labels.len() {
            return Err(BenchmarkError::Shape {
                instance_id: joined.row.instance_id.clone(),
                message: format!(
                    "{} predicted keyfact labels vs {} gold keyfact labels",
                    alignment.len(),
                    labels.len()
                ),
            });
        }
        let mut sorted: Vec<_> = labels.iter().collect();
        sorted.sort_by_key(|l| l.index);
        for (entry, label) in alignment.iter().zip(sorted) {
            pred.push(entry.matched);
            gold.push(label.matched);
        }
    }
    let pairs = pred.len();
    if pairs == 0 {
        return Ok(AgreementReport {
            keyfact_cohen_kappa: None,
            keyfact_krippendorff_alpha: None,
            pairs,
            note: Some("no keyfact labels on both sides".into()),
        });
    }
    let kappa = cohen_kappa(&pred, &gold);
    let ratings: Vec<Vec<Option<bool>>> = vec![
        pred.iter().map(|&b| Some(b)).collect(),
        gold.iter().map(|&b| Some(b)).collect(),
    ];
    let alpha = krippendorff_alpha_nominal(&ratings);
    let note = match (&kappa, &alpha) {
        (Err(e), _) => Some(e.to_string()),
        (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    Ok(AgreementReport {
        keyfact_cohen_kappa: kappa.ok(),
        keyfact_krippendorff_alpha: alpha.ok(),
        pairs,
        note,
    })
}
