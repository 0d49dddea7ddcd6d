//! Dataset loading: line-delimited JSON instances and gold annotations.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    normalize_category, EvalInstance, GoldAnnotations, GoldKeyfactLabel, GoldSentenceLabel,
    KeyfactList, KeyfactOrigin,
};
use crate::segment::segment_sentences;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("join error: gold row references unknown instance_id {instance_id:?}")]
    Join { instance_id: String },
    #[error("shape error for instance {instance_id:?}: {message}")]
    Shape {
        instance_id: String,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads instances from a JSONL file, one object per line, preserving file
/// order. Blank lines are skipped. Fails with the offending line number on
/// malformed rows, missing required fields, or duplicate instance ids.
pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<EvalInstance>, IngestError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);

    let mut instances = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let instance: EvalInstance =
            serde_json::from_str(&line).map_err(|e| IngestError::Schema {
                line: line_no,
                message: e.to_string(),
            })?;
        validate_instance(&instance, line_no)?;
        if let Some(&first) = seen.get(&instance.instance_id) {
            return Err(IngestError::Schema {
                line: line_no,
                message: format!(
                    "duplicate instance_id {:?} (first seen at line {first})",
                    instance.instance_id
                ),
            });
        }
        seen.insert(instance.instance_id.clone(), line_no);
        instances.push(instance);
    }
    Ok(instances)
}

fn validate_instance(instance: &EvalInstance, line: usize) -> Result<(), IngestError> {
    let fail = |message: String| Err(IngestError::Schema { line, message });
    if instance.instance_id.trim().is_empty() {
        return fail("field \"instance_id\" is empty".into());
    }
    if instance.system_id.trim().is_empty() {
        return fail("field \"system_id\" is empty".into());
    }
    if instance.document.is_empty() {
        return fail("field \"document\" is empty".into());
    }
    if instance.summary.is_none() && instance.summary_sentences.is_none() {
        return fail("one of \"summary\" or \"summary_sentences\" is required".into());
    }
    Ok(())
}

/// Writes instances back out as JSONL; `load_instances` of the result yields
/// structurally equal records.
pub fn write_instances(
    path: impl AsRef<Path>,
    instances: &[EvalInstance],
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut out = fs::File::create(path).map_err(|e| io_err(path, e))?;
    for instance in instances {
        let row = serde_json::to_string(instance).expect("instance serializes");
        writeln!(out, "{row}").map_err(|e| io_err(path, e))?;
    }
    Ok(())
}

/// Pre-split sentences win; otherwise the raw summary is segmented. An empty
/// result is represented as an empty list (degenerate, scored by fallback).
pub fn resolve_sentences(instance: &EvalInstance) -> Vec<String> {
    if let Some(sentences) = &instance.summary_sentences {
        return sentences.clone();
    }
    match &instance.summary {
        Some(text) => segment_sentences(text).unwrap_or_default(),
        None => Vec::new(),
    }
}

#[derive(Debug, Deserialize)]
struct KeyfactRow {
    instance_id: String,
    keyfacts: Vec<String>,
    #[serde(default)]
    origin: Option<KeyfactOrigin>,
}

/// Loads a keyfacts JSONL file (rows of instance_id + keyfact list), keyed
/// by instance_id. Origin defaults to human when absent.
pub fn load_keyfacts(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, KeyfactList>, IngestError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lists = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: KeyfactRow = serde_json::from_str(&line).map_err(|e| IngestError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if row.keyfacts.is_empty() {
            return Err(IngestError::Schema {
                line: line_no,
                message: format!("empty keyfact list for {:?}", row.instance_id),
            });
        }
        let list = KeyfactList {
            instance_id: row.instance_id.clone(),
            keyfacts: row.keyfacts,
            origin: row.origin.unwrap_or(KeyfactOrigin::Human),
        };
        if lists.insert(row.instance_id.clone(), list).is_some() {
            return Err(IngestError::Schema {
                line: line_no,
                message: format!("duplicate keyfact row for {:?}", row.instance_id),
            });
        }
    }
    Ok(lists)
}

#[derive(Debug, Deserialize, Serialize)]
struct GoldRow {
    instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentence_labels: Option<Vec<GoldSentenceRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keyfact_labels: Option<Vec<GoldKeyfactRow>>,
}

#[derive(Debug, Deserialize, Serialize)]
struct GoldSentenceRow {
    index: usize,
    has_error: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct GoldKeyfactRow {
    index: usize,
    matched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line_numbers: Option<Vec<usize>>,
}

/// Loads a gold JSONL file into per-instance annotations, keyed by
/// instance_id. Category strings are normalized; unknown ones fail.
pub fn load_gold(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, GoldAnnotations>, IngestError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);

    let mut gold = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: GoldRow = serde_json::from_str(&line).map_err(|e| IngestError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        let annotations = gold_row_to_annotations(row, line_no)?;
        let (instance_id, annotations) = annotations;
        if gold.insert(instance_id.clone(), annotations).is_some() {
            return Err(IngestError::Schema {
                line: line_no,
                message: format!("duplicate gold row for instance_id {instance_id:?}"),
            });
        }
    }
    Ok(gold)
}

fn gold_row_to_annotations(
    row: GoldRow,
    line: usize,
) -> Result<(String, GoldAnnotations), IngestError> {
    let sentence_labels = row
        .sentence_labels
        .map(|labels| {
            labels
                .into_iter()
                .map(|l| {
                    let category = match l.category {
                        Some(raw) => Some(normalize_category(&raw).ok_or_else(|| {
                            IngestError::Schema {
                                line,
                                message: format!("unknown gold category {raw:?}"),
                            }
                        })?),
                        None => None,
                    };
                    Ok(GoldSentenceLabel {
                        index: l.index,
                        has_error: l.has_error,
                        category,
                    })
                })
                .collect::<Result<Vec<_>, IngestError>>()
        })
        .transpose()?;
    let keyfact_labels = row.keyfact_labels.map(|labels| {
        labels
            .into_iter()
            .map(|l| GoldKeyfactLabel {
                index: l.index,
                matched: l.matched,
                line_numbers: l.line_numbers.map(|v| v.into_iter().collect()),
            })
            .collect()
    });
    Ok((
        row.instance_id,
        GoldAnnotations {
            sentence_labels,
            keyfact_labels,
        },
    ))
}

/// Joins gold annotations onto instances by instance_id. Every gold row must
/// match an instance; label index sets must cover exactly 1..=N sentences
/// (resp. 1..=M keyfacts, when the instance carries keyfacts).
pub fn attach_gold(
    instances: &mut [EvalInstance],
    gold_path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let mut gold = load_gold(gold_path)?;

    let known: BTreeSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    if let Some(unknown) = gold.keys().find(|id| !known.contains(id.as_str())) {
        return Err(IngestError::Join {
            instance_id: unknown.clone(),
        });
    }

    for instance in instances.iter_mut() {
        let Some(annotations) = gold.remove(&instance.instance_id) else {
            continue;
        };
        if let Some(labels) = &annotations.sentence_labels {
            let n = resolve_sentences(instance).len();
            check_index_coverage(
                &instance.instance_id,
                "sentence_labels",
                labels.iter().map(|l| l.index),
                n,
            )?;
        }
        if let (Some(labels), Some(keyfacts)) = (&annotations.keyfact_labels, &instance.keyfacts) {
            check_index_coverage(
                &instance.instance_id,
                "keyfact_labels",
                labels.iter().map(|l| l.index),
                keyfacts.len(),
            )?;
        }
        instance.gold = Some(annotations);
    }
    Ok(())
}

fn check_index_coverage(
    instance_id: &str,
    what: &str,
    indices: impl Iterator<Item = usize>,
    expected: usize,
) -> Result<(), IngestError> {
    let got: BTreeSet<usize> = indices.collect();
    let want: BTreeSet<usize> = (1..=expected).collect();
    if got != want {
        return Err(IngestError::Shape {
            instance_id: instance_id.to_string(),
            message: format!(
                "{what} must cover indices 1..={expected}, got {} labels for {:?}",
                got.len(),
                got
            ),
        });
    }
    Ok(())
}
