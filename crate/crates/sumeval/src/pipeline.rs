//! End-to-end orchestration: segment, render, complete, parse, score.
//!
//! Instances are processed in input order; batching through the gateway is
//! invisible in the outputs, and nothing in a results file depends on wall
//! time, so two runs over identical inputs write byte-identical files.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{CompletionRequest, Gateway, GatewayError, TransportStatus};
use crate::ingest::resolve_sentences;
use crate::model::{
    normalize_category, AlignmentGraph, EvalInstance, FactCheckVerdict, Fraction,
    KeyfactAlignment, KeyfactList, Provenance, ScoreTriple,
};
use crate::parser::{
    parse_alignment, parse_fact_check, parse_keyfacts, success_ratio, ParseMode, ParseOutcome,
    ParseSummary, ParseWarning,
};
use crate::prompt::{
    render_alignment, render_fact_check, render_keyfact_extraction, render_summarize,
    PromptVariant, Task,
};
use crate::scoring::{score_instance, TaskSet};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Where keyfacts come from when the alignment task is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyfactSource {
    /// Inline on the instance or joined from a keyfacts file.
    Provided,
    /// Extracted by the LLM from a reference summary field.
    ExtractFromReference,
}

/// Pipeline configuration for one evaluation run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task_set: TaskSet,
    pub fact_check_variant: PromptVariant,
    pub alignment_variant: PromptVariant,
    pub parse_mode: ParseMode,
    pub keyfact_source: KeyfactSource,
    /// Instance field holding the reference summary used for extraction.
    pub reference_field: String,
    /// Embed the raw LLM text in results rows.
    pub include_raw: bool,
    /// Extraction results are cached here, keyed by instance_id, so
    /// alignment re-runs reuse them.
    pub keyfact_cache_path: Option<PathBuf>,
    /// Echoed into the run summary; the evaluation itself is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task_set: TaskSet::both(),
            fact_check_variant: PromptVariant::default_for(Task::FactCheck),
            alignment_variant: PromptVariant::default_for(Task::KeyfactAlignment),
            parse_mode: ParseMode::Strict,
            keyfact_source: KeyfactSource::Provided,
            reference_field: "reference".to_string(),
            include_raw: true,
            keyfact_cache_path: None,
            seed: 0,
        }
    }
}

/// One results-file row. Field names are part of the on-disk contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub instance_id: String,
    pub system_id: String,
    pub scores: ScoresOut,
    /// Exact numerator/denominator pairs behind the float scores.
    pub scores_exact: ScoresExact,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<Vec<VerdictOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Vec<AlignmentOut>>,
    pub parse: ParseEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawEcho>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresOut {
    pub faithfulness: Option<f64>,
    pub completeness: Option<f64>,
    pub conciseness: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresExact {
    pub faithfulness: Option<Fraction>,
    pub completeness: Option<Fraction>,
    pub conciseness: Option<Fraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictOut {
    pub index: usize,
    /// Canonical category string, e.g. "no error".
    pub category: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOut {
    pub index: usize,
    pub matched: bool,
    pub line_numbers: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParseEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fact_check: Option<ParseSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<ParseSummary>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fact_check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<String>,
}

impl ResultsRow {
    /// Verdicts decoded back to typed categories; `None` when any category
    /// string fails to normalize.
    pub fn typed_verdicts(&self) -> Option<Vec<FactCheckVerdict>> {
        let verdicts = self.verdicts.as_ref()?;
        verdicts
            .iter()
            .map(|v| {
                normalize_category(&v.category).map(|category| FactCheckVerdict {
                    sentence_index: v.index,
                    category,
                    reason: v.reason.clone(),
                })
            })
            .collect()
    }

    pub fn typed_alignment(&self) -> Option<AlignmentGraph> {
        let entries = self.alignment.as_ref()?;
        Some(AlignmentGraph::new(
            entries
                .iter()
                .map(|e| KeyfactAlignment {
                    keyfact_index: e.index,
                    matched: e.matched,
                    line_numbers: e.line_numbers.clone(),
                })
                .collect(),
        ))
    }

    /// Score triple reconstructed from the exact fractions.
    pub fn score_triple(&self) -> ScoreTriple {
        ScoreTriple {
            faithfulness: self.scores_exact.faithfulness,
            completeness: self.scores_exact.completeness,
            conciseness: self.scores_exact.conciseness,
            provenance: self.scores.provenance,
        }
    }
}

/// A per-instance problem recorded in the run summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceNote {
    pub instance_id: String,
    pub stage: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRatioOut {
    pub ok: usize,
    pub total: usize,
    pub ratio: Option<Fraction>,
}

/// Deterministic run summary: resolved configuration, counts, per-task
/// success ratios, and per-instance error notes. No timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ConfigEcho,
    pub counts: RunCounts,
    pub success_ratio: BTreeMap<String, SuccessRatioOut>,
    pub errors: Vec<InstanceNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tasks: Vec<String>,
    pub templates: BTreeMap<String, String>,
    pub backend_kind: String,
    pub model: String,
    pub temperature: f64,
    pub parallelism: usize,
    pub parse_mode: ParseMode,
    pub keyfact_source: KeyfactSource,
    pub reference_field: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunCounts {
    pub instances: usize,
    pub scored: usize,
    pub failure_defaults: usize,
    pub degenerate_summaries: usize,
}

/// Everything an evaluation run produces.
#[derive(Debug, Clone)]
pub struct EvaluationRun {
    pub rows: Vec<ResultsRow>,
    pub summary: RunSummary,
}

fn config_echo(cfg: &RunConfig, gateway: &Gateway) -> ConfigEcho {
    let mut tasks = Vec::new();
    let mut templates = BTreeMap::new();
    if cfg.task_set.fact_check {
        tasks.push("fact_check".to_string());
        let key = cfg.fact_check_variant.template_key();
        templates.insert(key.clone(), crate::prompt::template_version(&key));
    }
    if cfg.task_set.alignment {
        tasks.push("alignment".to_string());
        let key = cfg.alignment_variant.template_key();
        templates.insert(key.clone(), crate::prompt::template_version(&key));
        if cfg.keyfact_source == KeyfactSource::ExtractFromReference {
            let key = "keyfact_extraction.default.txt".to_string();
            templates.insert(key.clone(), crate::prompt::template_version(&key));
        }
    }
    let backend = gateway.config();
    ConfigEcho {
        tasks,
        templates,
        backend_kind: match backend.kind {
            crate::gateway::BackendKind::OpenAiCompatibleHttp => "openai_compatible_http".into(),
            crate::gateway::BackendKind::MockReplay => "mock_replay".into(),
        },
        model: backend.model_name.clone(),
        temperature: backend.temperature,
        parallelism: backend.parallelism,
        parse_mode: cfg.parse_mode,
        keyfact_source: cfg.keyfact_source,
        reference_field: cfg.reference_field.clone(),
        seed: cfg.seed,
    }
}

/// Backends may truncate long inputs server-side; anything past this many
/// characters gets flagged in the run summary. No client-side truncation.
const LONG_PROMPT_CHARS: usize = 32_000;

fn flag_long_prompt(
    notes: &mut Vec<InstanceNote>,
    instance_id: &str,
    stage: &str,
    prompt_text: &str,
) {
    let chars = prompt_text.chars().count();
    if chars > LONG_PROMPT_CHARS {
        notes.push(InstanceNote {
            instance_id: instance_id.to_string(),
            stage: stage.to_string(),
            detail: format!(
                "prompt is {chars} characters; the backend may truncate it"
            ),
        });
    }
}

fn reference_text(instance: &EvalInstance, field: &str) -> Option<String> {
    instance
        .extra
        .get(field)
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .filter(|s| !s.trim().is_empty())
}

/// Loads previously extracted keyfacts from the cache file, if any.
fn load_keyfact_cache(path: &Path) -> HashMap<String, KeyfactList> {
    let Ok(file) = fs::File::open(path) else {
        return HashMap::new();
    };
    let mut cache = HashMap::new();
    for line in BufReader::new(file).lines().map_while(Result::ok) {
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(list) = serde_json::from_str::<KeyfactList>(&line) {
            cache.insert(list.instance_id.clone(), list);
        }
    }
    cache
}

fn append_keyfact_cache(path: &Path, lists: &[KeyfactList]) -> Result<(), PipelineError> {
    if lists.is_empty() {
        return Ok(());
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    for list in lists {
        writeln!(file, "{}", serde_json::to_string(list).expect("serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

struct Work {
    instance: EvalInstance,
    sentences: Vec<String>,
    keyfacts: Option<Vec<String>>,
}

/// Resolves keyfacts for instances that need them, extracting via the LLM
/// where configured. Returns per-instance notes for failures.
fn resolve_keyfacts(
    work: &mut [Work],
    cfg: &RunConfig,
    gateway: &Gateway,
    notes: &mut Vec<InstanceNote>,
    extraction_outcomes: &mut Vec<ParseSummary>,
) -> Result<(), PipelineError> {
    for w in work.iter_mut() {
        if let Some(list) = &w.instance.keyfacts {
            if !list.is_empty() {
                w.keyfacts = Some(list.clone());
            }
        }
    }
    if cfg.keyfact_source != KeyfactSource::ExtractFromReference {
        return Ok(());
    }

    let mut cache = cfg
        .keyfact_cache_path
        .as_deref()
        .map(load_keyfact_cache)
        .unwrap_or_default();
    let mut pending: Vec<usize> = Vec::new();
    for (i, w) in work.iter_mut().enumerate() {
        if w.keyfacts.is_some() {
            continue;
        }
        if let Some(cached) = cache.remove(&w.instance.instance_id) {
            w.keyfacts = Some(cached.keyfacts);
            continue;
        }
        pending.push(i);
    }

    let mut requests = Vec::new();
    let mut request_owner = Vec::new();
    for &i in &pending {
        let w = &work[i];
        match reference_text(&w.instance, &cfg.reference_field) {
            Some(reference) => match render_keyfact_extraction(&reference) {
                Ok(prompt) => {
                    requests.push(CompletionRequest {
                        instance_id: w.instance.instance_id.clone(),
                        task: Task::KeyfactExtraction,
                        prompt,
                    });
                    request_owner.push(i);
                }
                Err(e) => notes.push(InstanceNote {
                    instance_id: w.instance.instance_id.clone(),
                    stage: "keyfact_extraction".into(),
                    detail: e.to_string(),
                }),
            },
            None => notes.push(InstanceNote {
                instance_id: w.instance.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: format!("missing reference field {:?}", cfg.reference_field),
            }),
        }
    }

    let results = gateway.complete_batch(&requests);
    let mut extracted = Vec::new();
    for (result, &owner) in results.iter().zip(&request_owner) {
        if let TransportStatus::TransportError(detail) = &result.transport_status {
            notes.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: detail.clone(),
            });
        }
        let outcome = parse_keyfacts(&result.raw_text, &result.instance_id);
        extraction_outcomes.push(outcome.summary());
        match outcome {
            ParseOutcome::Ok { payload, .. } => {
                work[owner].keyfacts = Some(payload.keyfacts.clone());
                extracted.push(payload);
            }
            ParseOutcome::Failed { reason, .. } => notes.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: format!("parse failed: {}", reason.as_str()),
            }),
        }
    }
    if let Some(path) = &cfg.keyfact_cache_path {
        append_keyfact_cache(path, &extracted)?;
    }
    Ok(())
}

/// Evaluates every instance: renders the configured task prompts, completes
/// them with bounded parallelism, parses, and scores. Per-instance failures
/// are recorded and scored with the failure-default triple; they never abort
/// the run.
pub fn run_evaluation(
    instances: &[EvalInstance],
    cfg: &RunConfig,
    gateway: &Gateway,
) -> Result<EvaluationRun, PipelineError> {
    if cfg.task_set.is_empty() {
        return Err(PipelineError::Config("task set must not be empty".into()));
    }

    let mut notes: Vec<InstanceNote> = Vec::new();
    let mut work: Vec<Work> = instances
        .iter()
        .map(|instance| Work {
            sentences: resolve_sentences(instance),
            keyfacts: None,
            instance: instance.clone(),
        })
        .collect();

    let mut extraction_outcomes = Vec::new();
    if cfg.task_set.alignment {
        resolve_keyfacts(&mut work, cfg, gateway, &mut notes, &mut extraction_outcomes)?;
    }

    // Render and dispatch fact-check prompts.
    let mut fact_requests = Vec::new();
    let mut fact_owner = Vec::new();
    if cfg.task_set.fact_check {
        for (i, w) in work.iter().enumerate() {
            if w.sentences.is_empty() {
                continue;
            }
            match render_fact_check(&w.instance.document, &w.sentences, &cfg.fact_check_variant) {
                Ok(prompt) => {
                    flag_long_prompt(
                        &mut notes,
                        &w.instance.instance_id,
                        "fact_check",
                        &prompt.text,
                    );
                    fact_requests.push(CompletionRequest {
                        instance_id: w.instance.instance_id.clone(),
                        task: Task::FactCheck,
                        prompt,
                    });
                    fact_owner.push(i);
                }
                Err(e) => notes.push(InstanceNote {
                    instance_id: w.instance.instance_id.clone(),
                    stage: "fact_check".into(),
                    detail: e.to_string(),
                }),
            }
        }
    }
    let fact_results = gateway.complete_batch(&fact_requests);

    let mut align_requests = Vec::new();
    let mut align_owner = Vec::new();
    if cfg.task_set.alignment {
        for (i, w) in work.iter().enumerate() {
            if w.sentences.is_empty() {
                continue;
            }
            let Some(keyfacts) = &w.keyfacts else {
                notes.push(InstanceNote {
                    instance_id: w.instance.instance_id.clone(),
                    stage: "alignment".into(),
                    detail: "no keyfacts available".into(),
                });
                continue;
            };
            match render_alignment(keyfacts, &w.sentences, &cfg.alignment_variant) {
                Ok(prompt) => {
                    flag_long_prompt(
                        &mut notes,
                        &w.instance.instance_id,
                        "alignment",
                        &prompt.text,
                    );
                    align_requests.push(CompletionRequest {
                        instance_id: w.instance.instance_id.clone(),
                        task: Task::KeyfactAlignment,
                        prompt,
                    });
                    align_owner.push(i);
                }
                Err(e) => notes.push(InstanceNote {
                    instance_id: w.instance.instance_id.clone(),
                    stage: "alignment".into(),
                    detail: e.to_string(),
                }),
            }
        }
    }
    let align_results = gateway.complete_batch(&align_requests);

    // Collect raw replies per work index.
    let mut fact_raw: HashMap<usize, &crate::gateway::CompletionResult> = HashMap::new();
    for (result, &owner) in fact_results.iter().zip(&fact_owner) {
        fact_raw.insert(owner, result);
        if let TransportStatus::TransportError(detail) = &result.transport_status {
            notes.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "fact_check".into(),
                detail: detail.clone(),
            });
        }
    }
    let mut align_raw: HashMap<usize, &crate::gateway::CompletionResult> = HashMap::new();
    for (result, &owner) in align_results.iter().zip(&align_owner) {
        align_raw.insert(owner, result);
        if let TransportStatus::TransportError(detail) = &result.transport_status {
            notes.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "alignment".into(),
                detail: detail.clone(),
            });
        }
    }

    let mut rows = Vec::with_capacity(work.len());
    let mut counts = RunCounts {
        instances: work.len(),
        ..RunCounts::default()
    };
    let mut fact_outcomes_acc: Vec<ParseSummary> = Vec::new();
    let mut align_outcomes_acc: Vec<ParseSummary> = Vec::new();

    for (i, w) in work.iter().enumerate() {
        let n = w.sentences.len();
        let m = w.keyfacts.as_ref().map_or(0, Vec::len);
        if n == 0 {
            counts.degenerate_summaries += 1;
            notes.push(InstanceNote {
                instance_id: w.instance.instance_id.clone(),
                stage: "segmentation".into(),
                detail: "degenerate summary: no sentences".into(),
            });
        }

        let fact_outcome = if cfg.task_set.fact_check {
            fact_raw.get(&i).map(|result| {
                let outcome = parse_fact_check(&result.raw_text, n, cfg.parse_mode);
                fact_outcomes_acc.push(outcome.summary());
                outcome
            })
        } else {
            None
        };
        let align_outcome = if cfg.task_set.alignment {
            align_raw.get(&i).map(|result| {
                let outcome = parse_alignment(&result.raw_text, m, n, cfg.parse_mode);
                align_outcomes_acc.push(outcome.summary());
                outcome
            })
        } else {
            None
        };

        let scores = score_instance(
            fact_outcome.as_ref(),
            align_outcome.as_ref(),
            n,
            m,
            cfg.task_set,
        );
        if scores.is_failure_default() {
            counts.failure_defaults += 1;
        }
        counts.scored += 1;

        let mut warnings = Vec::new();
        if let Some(o) = &fact_outcome {
            warnings.extend_from_slice(o.warnings());
        }
        if let Some(o) = &align_outcome {
            warnings.extend_from_slice(o.warnings());
        }

        let verdicts = fact_outcome.as_ref().and_then(|o| o.payload()).map(|vs| {
            vs.iter()
                .map(|v| VerdictOut {
                    index: v.sentence_index,
                    category: v.category.canonical().to_string(),
                    reason: v.reason.clone(),
                })
                .collect()
        });
        let alignment = align_outcome.as_ref().and_then(|o| o.payload()).map(|g| {
            g.entries
                .iter()
                .map(|e| AlignmentOut {
                    index: e.keyfact_index,
                    matched: e.matched,
                    line_numbers: e.line_numbers.clone(),
                })
                .collect()
        });
        let parse = ParseEcho {
            fact_check: fact_outcome.as_ref().map(|o| o.summary()),
            alignment: align_outcome.as_ref().map(|o| o.summary()),
        };
        let raw = cfg.include_raw.then(|| RawEcho {
            fact_check: fact_raw.get(&i).map(|r| r.raw_text.clone()),
            alignment: align_raw.get(&i).map(|r| r.raw_text.clone()),
        });

        rows.push(ResultsRow {
            instance_id: w.instance.instance_id.clone(),
            system_id: w.instance.system_id.clone(),
            scores: ScoresOut {
                faithfulness: scores.faithfulness.map(|f| f.value()),
                completeness: scores.completeness.map(|f| f.value()),
                conciseness: scores.conciseness.map(|f| f.value()),
                provenance: scores.provenance,
            },
            scores_exact: ScoresExact {
                faithfulness: scores.faithfulness,
                completeness: scores.completeness,
                conciseness: scores.conciseness,
            },
            verdicts,
            alignment,
            parse,
            raw,
            warnings,
        });
    }

    let mut ratios = BTreeMap::new();
    let mut insert_ratio = |name: &str, outcomes: &[ParseSummary]| {
        ratios.insert(
            name.to_string(),
            SuccessRatioOut {
                ok: outcomes.iter().filter(|o| o.is_ok()).count(),
                total: outcomes.len(),
                ratio: success_ratio(outcomes).ok(),
            },
        );
    };
    if cfg.task_set.fact_check {
        insert_ratio("fact_check", &fact_outcomes_acc);
    }
    if cfg.task_set.alignment {
        insert_ratio("alignment", &align_outcomes_acc);
        if cfg.keyfact_source == KeyfactSource::ExtractFromReference {
            insert_ratio("keyfact_extraction", &extraction_outcomes);
        }
    }

    Ok(EvaluationRun {
        rows,
        summary: RunSummary {
            config: config_echo(cfg, gateway),
            counts,
            success_ratio: ratios,
            errors: notes,
        },
    })
}

/// Writes results rows as JSONL, one row per instance in input order.
pub fn write_results(path: impl AsRef<Path>, rows: &[ResultsRow]) -> Result<(), PipelineError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        writeln!(file, "{}", serde_json::to_string(row).expect("row serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Loads a results JSONL file.
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultsRow>, PipelineError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ResultsRow = serde_json::from_str(&line).map_err(|e| {
            PipelineError::Config(format!(
                "bad results row at {}:{}: {e}",
                path.display(),
                idx + 1
            ))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Output of keyfact extraction over a dataset.
#[derive(Debug, Clone)]
pub struct ExtractionRun {
    pub lists: Vec<KeyfactList>,
    pub errors: Vec<InstanceNote>,
    pub outcomes: Vec<ParseSummary>,
}

/// Extracts keyfacts for every instance with a reference summary. Instances
/// whose reply cannot be parsed emit no row, only an error note.
pub fn run_keyfact_extraction(
    instances: &[EvalInstance],
    reference_field: &str,
    gateway: &Gateway,
) -> ExtractionRun {
    let mut errors = Vec::new();
    let mut requests = Vec::new();
    for instance in instances {
        match reference_text(instance, reference_field) {
            Some(reference) => match render_keyfact_extraction(&reference) {
                Ok(prompt) => requests.push(CompletionRequest {
                    instance_id: instance.instance_id.clone(),
                    task: Task::KeyfactExtraction,
                    prompt,
                }),
                Err(e) => errors.push(InstanceNote {
                    instance_id: instance.instance_id.clone(),
                    stage: "keyfact_extraction".into(),
                    detail: e.to_string(),
                }),
            },
            None => errors.push(InstanceNote {
                instance_id: instance.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: format!("missing reference field {reference_field:?}"),
            }),
        }
    }

    let results = gateway.complete_batch(&requests);
    let mut lists = Vec::new();
    let mut outcomes = Vec::new();
    for result in &results {
        if let TransportStatus::TransportError(detail) = &result.transport_status {
            errors.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: detail.clone(),
            });
        }
        let outcome = parse_keyfacts(&result.raw_text, &result.instance_id);
        outcomes.push(outcome.summary());
        match outcome {
            ParseOutcome::Ok { payload, .. } => lists.push(payload),
            ParseOutcome::Failed { reason, .. } => errors.push(InstanceNote {
                instance_id: result.instance_id.clone(),
                stage: "keyfact_extraction".into(),
                detail: format!("parse failed: {}", reason.as_str()),
            }),
        }
    }
    ExtractionRun {
        lists,
        errors,
        outcomes,
    }
}

/// Writes keyfact lists as JSONL rows consumable by `--keyfacts`.
pub fn write_keyfacts(
    path: impl AsRef<Path>,
    lists: &[KeyfactList],
) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    for list in lists {
        writeln!(file, "{}", serde_json::to_string(list).expect("serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// One generated summary, shaped as an evaluation-instance row so downstream
/// runs consume it directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance_id: String,
    pub system_id: String,
    pub document: String,
    pub summary: String,
}

#[derive(Debug, Clone)]
pub struct SummarizeRun {
    pub rows: Vec<SummaryRow>,
    pub errors: Vec<InstanceNote>,
}

/// Generates a summary per document; the producing model name becomes the
/// system_id.
pub fn run_summarize(
    documents: &[crate::model::Document],
    gateway: &Gateway,
) -> SummarizeRun {
    let mut errors = Vec::new();
    let mut requests = Vec::new();
    let mut owners = Vec::new();
    for (i, doc) in documents.iter().enumerate() {
        match render_summarize(&doc.text) {
            Ok(prompt) => {
                requests.push(CompletionRequest {
                    instance_id: doc.doc_id.clone(),
                    task: Task::Summarize,
                    prompt,
                });
                owners.push(i);
            }
            Err(e) => errors.push(InstanceNote {
                instance_id: doc.doc_id.clone(),
                stage: "summarize".into(),
                detail: e.to_string(),
            }),
        }
    }
    let results = gateway.complete_batch(&requests);
    let mut rows = Vec::new();
    for (result, &owner) in results.iter().zip(&owners) {
        match &result.transport_status {
            TransportStatus::Ok => rows.push(SummaryRow {
                instance_id: documents[owner].doc_id.clone(),
                system_id: gateway.config().model_name.clone(),
                document: documents[owner].text.clone(),
                summary: result.raw_text.clone(),
            }),
            TransportStatus::TransportError(detail) => errors.push(InstanceNote {
                instance_id: documents[owner].doc_id.clone(),
                stage: "summarize".into(),
                detail: detail.clone(),
            }),
        }
    }
    SummarizeRun { rows, errors }
}

/// Writes summary rows as JSONL.
pub fn write_summaries(
    path: impl AsRef<Path>,
    rows: &[SummaryRow],
) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        writeln!(file, "{}", serde_json::to_string(row).expect("serializes"))
            .map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
