//! Extraction and validation of JSON payloads from raw LLM text.
//!
//! Replies routinely arrive wrapped in code fences or prose; `extract_json`
//! scans for the earliest balanced JSON candidate that parses. Each task
//! parser then enforces its schema and coverage, classifying failures as
//! one of: not_json, wrong_schema, incomplete_coverage, empty_output.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    normalize_category, AlignmentGraph, ErrorCategory, FactCheckVerdict, Fraction,
    KeyfactAlignment, KeyfactList, KeyfactOrigin, MACHINE_KEYFACT_CAP,
};

/// Why a reply failed to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NotJson,
    WrongSchema,
    IncompleteCoverage,
    EmptyOutput,
}

impl FailureReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::NotJson => "not_json",
            FailureReason::WrongSchema => "wrong_schema",
            FailureReason::IncompleteCoverage => "incomplete_coverage",
            FailureReason::EmptyOutput => "empty_output",
        }
    }
}

/// Parse policy. Strict is the default; lenient coerces unknown categories
/// to OtherE and truncates over-long arrays, but never invents missing rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// A structured data-quality note attached to a parse outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    LineNumberOutOfRange { keyfact_index: usize, line: usize },
    NonIntegerLineDropped { keyfact_index: usize },
    LinesDroppedForNoResponse { keyfact_index: usize },
    UnknownCategoryCoerced { index: usize, raw: String },
    UnknownResponseCoerced { index: usize, raw: String },
    ExtraItemsTruncated { expected: usize, got: usize },
    KeyfactsTruncated { kept: usize, got: usize },
    EmptyKeyfactDropped { index: usize },
}

/// Outcome of parsing one reply: a payload with warnings, or a classified
/// failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome<T> {
    Ok {
        payload: T,
        warnings: Vec<ParseWarning>,
    },
    Failed {
        reason: FailureReason,
        warnings: Vec<ParseWarning>,
    },
}

impl<T> ParseOutcome<T> {
    pub fn ok(payload: T) -> Self {
        ParseOutcome::Ok {
            payload,
            warnings: Vec::new(),
        }
    }

    pub fn failed(reason: FailureReason) -> Self {
        ParseOutcome::Failed {
            reason,
            warnings: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, ParseOutcome::Ok { .. })
    }

    pub fn payload(&self) -> Option<&T> {
        match self {
            ParseOutcome::Ok { payload, .. } => Some(payload),
            ParseOutcome::Failed { .. } => None,
        }
    }

    pub fn failure_reason(&self) -> Option<FailureReason> {
        match self {
            ParseOutcome::Ok { .. } => None,
            ParseOutcome::Failed { reason, .. } => Some(*reason),
        }
    }

    pub fn warnings(&self) -> &[ParseWarning] {
        match self {
            ParseOutcome::Ok { warnings, .. } | ParseOutcome::Failed { warnings, .. } => warnings,
        }
    }

    pub fn summary(&self) -> ParseSummary {
        ParseSummary {
            status: if self.is_ok() {
                ParseStatus::Ok
            } else {
                ParseStatus::Failed
            },
            reason: self.failure_reason(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Failed,
}

/// Compact status echo for results rows and success-ratio accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailureReason>,
}

impl ParseSummary {
    pub fn is_ok(&self) -> bool {
        self.status == ParseStatus::Ok
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParserError {
    #[error("success ratio over an empty outcome list is undefined")]
    EmptyInput,
}

/// Strips a single leading/trailing markdown code fence, if present.
fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed
        .strip_prefix("```json")
        .or_else(|| trimmed.strip_prefix("```JSON"))
        .or_else(|| trimmed.strip_prefix("```"))
    else {
        return trimmed;
    };
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

/// Finds the earliest balanced `{...}` or `[...]` span that parses as JSON.
///
/// Bracket matching is string-escape aware, and string state only begins
/// inside a candidate, so stray quotes in surrounding prose cannot hide a
/// payload. Returns `None` when no candidate parses.
pub fn extract_json(raw_text: &str) -> Option<Value> {
    let text = strip_code_fences(raw_text);
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return Some(v);
    }
    let bytes = text.as_bytes();
    let mut search_from = 0usize;
    while let Some(offset) = text[search_from..].find(['{', '[']) {
        let start = search_from + offset;
        if let Some(end) = balanced_end(bytes, start) {
            if let Ok(v) = serde_json::from_str::<Value>(&text[start..=end]) {
                return Some(v);
            }
        }
        search_from = start + 1;
    }
    None
}

/// Byte index of the close bracket balancing the open bracket at `start`.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    let mut stack: Vec<u8> = Vec::new();
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' | b'[' => {
                stack.push(b);
                depth += 1;
            }
            b'}' | b']' => {
                let open = stack.pop()?;
                let matches = (open == b'{' && b == b'}') || (open == b'[' && b == b']');
                if !matches {
                    return None;
                }
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Shared head: classify blank input and unextractable JSON.
fn extract_or_fail<T>(raw_text: &str) -> Result<Value, ParseOutcome<T>> {
    if raw_text.trim().is_empty() {
        return Err(ParseOutcome::failed(FailureReason::EmptyOutput));
    }
    extract_json(raw_text).ok_or_else(|| ParseOutcome::failed(FailureReason::NotJson))
}

/// Parses a fact-checking reply into per-sentence verdicts.
///
/// Pairing is positional: the i-th array element is the verdict for sentence
/// i, regardless of any echoed sentence text.
pub fn parse_fact_check(
    raw_text: &str,
    expected_count: usize,
    mode: ParseMode,
) -> ParseOutcome<Vec<FactCheckVerdict>> {
    let value = match extract_or_fail(raw_text) {
        Ok(v) => v,
        Err(outcome) => return outcome,
    };
    let Value::Array(items) = value else {
        return ParseOutcome::failed(FailureReason::WrongSchema);
    };
    let mut warnings = Vec::new();

    let items = match check_coverage(items, expected_count, mode, &mut warnings) {
        Ok(items) => items,
        Err(reason) => {
            return ParseOutcome::Failed { reason, warnings };
        }
    };

    let mut verdicts = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(obj) = item else {
            return ParseOutcome::Failed {
                reason: FailureReason::WrongSchema,
                warnings,
            };
        };
        let Some(Value::String(raw_category)) = obj.get("category") else {
            return ParseOutcome::Failed {
                reason: FailureReason::WrongSchema,
                warnings,
            };
        };
        let category = match normalize_category(raw_category) {
            Some(c) => c,
            None => match mode {
                ParseMode::Strict => {
                    return ParseOutcome::Failed {
                        reason: FailureReason::WrongSchema,
                        warnings,
                    };
                }
                ParseMode::Lenient => {
                    warnings.push(ParseWarning::UnknownCategoryCoerced {
                        index: i + 1,
                        raw: raw_category.clone(),
                    });
                    ErrorCategory::Other
                }
            },
        };
        let reason = match obj.get("reason") {
            Some(Value::String(s)) => s.clone(),
            _ => String::new(),
        };
        verdicts.push(FactCheckVerdict {
            sentence_index: i + 1,
            category,
            reason,
        });
    }
    ParseOutcome::Ok {
        payload: verdicts,
        warnings,
    }
}

/// Coverage policy shared by the two array-shaped tasks: short arrays are
/// always incomplete; long arrays fail in strict mode and truncate in
/// lenient mode.
fn check_coverage(
    mut items: Vec<Value>,
    expected: usize,
    mode: ParseMode,
    warnings: &mut Vec<ParseWarning>,
) -> Result<Vec<Value>, FailureReason> {
    if items.len() < expected {
        return Err(FailureReason::IncompleteCoverage);
    }
    if items.len() > expected {
        match mode {
            ParseMode::Strict => return Err(FailureReason::IncompleteCoverage),
            ParseMode::Lenient => {
                warnings.push(ParseWarning::ExtraItemsTruncated {
                    expected,
                    got: items.len(),
                });
                items.truncate(expected);
            }
        }
    }
    Ok(items)
}

/// Parses a keyfact-alignment reply into an alignment graph over keyfacts
/// 1..=M and sentences 1..=N.
pub fn parse_alignment(
    raw_text: &str,
    expected_count: usize,
    num_sentences: usize,
    mode: ParseMode,
) -> ParseOutcome<AlignmentGraph> {
    let value = match extract_or_fail(raw_text) {
        Ok(v) => v,
        Err(outcome) => return outcome,
    };
    let Value::Array(items) = value else {
        return ParseOutcome::failed(FailureReason::WrongSchema);
    };
    let mut warnings = Vec::new();

    let items = match check_coverage(items, expected_count, mode, &mut warnings) {
        Ok(items) => items,
        Err(reason) => {
            return ParseOutcome::Failed { reason, warnings };
        }
    };

    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let keyfact_index = i + 1;
        let Value::Object(obj) = item else {
            return ParseOutcome::Failed {
                reason: FailureReason::WrongSchema,
                warnings,
            };
        };
        let Some(Value::String(raw_response)) = obj.get("response") else {
            return ParseOutcome::Failed {
                reason: FailureReason::WrongSchema,
                warnings,
            };
        };
        let matched = match raw_response.trim().to_lowercase().as_str() {
            "yes" => true,
            "no" => false,
            _ => match mode {
                ParseMode::Strict => {
                    return ParseOutcome::Failed {
                        reason: FailureReason::WrongSchema,
                        warnings,
                    };
                }
                ParseMode::Lenient => {
                    warnings.push(ParseWarning::UnknownResponseCoerced {
                        index: keyfact_index,
                        raw: raw_response.clone(),
                    });
                    false
                }
            },
        };

        let raw_lines = obj
            .get("line numbers")
            .or_else(|| obj.get("line_numbers"));
        let mut line_numbers = BTreeSet::new();
        if let Some(raw_lines) = raw_lines {
            let Value::Array(raw_lines) = raw_lines else {
                return ParseOutcome::Failed {
                    reason: FailureReason::WrongSchema,
                    warnings,
                };
            };
            for entry in raw_lines {
                let line = match entry {
                    Value::Number(n) => n.as_u64().map(|v| v as usize),
                    Value::String(s) if mode == ParseMode::Lenient => {
                        s.trim().parse::<usize>().ok()
                    }
                    _ => None,
                };
                let Some(line) = line else {
                    match mode {
                        ParseMode::Strict => {
                            return ParseOutcome::Failed {
                                reason: FailureReason::WrongSchema,
                                warnings,
                            };
                        }
                        ParseMode::Lenient => {
                            warnings.push(ParseWarning::NonIntegerLineDropped { keyfact_index });
                            continue;
                        }
                    }
                };
                if line < 1 || line > num_sentences {
                    warnings.push(ParseWarning::LineNumberOutOfRange {
                        keyfact_index,
                        line,
                    });
                    continue;
                }
                line_numbers.insert(line);
            }
        }
        if !matched && !line_numbers.is_empty() {
            warnings.push(ParseWarning::LinesDroppedForNoResponse { keyfact_index });
            line_numbers.clear();
        }
        entries.push(KeyfactAlignment {
            keyfact_index,
            matched,
            line_numbers,
        });
    }
    ParseOutcome::Ok {
        payload: AlignmentGraph::new(entries),
        warnings,
    }
}

/// Parses a keyfact-extraction reply: an object with a "key facts" list,
/// capped at 16 entries.
pub fn parse_keyfacts(raw_text: &str, instance_id: &str) -> ParseOutcome<KeyfactList> {
    let value = match extract_or_fail(raw_text) {
        Ok(v) => v,
        Err(outcome) => return outcome,
    };
    let Value::Object(obj) = value else {
        return ParseOutcome::failed(FailureReason::WrongSchema);
    };
    let Some(Value::Array(raw_list)) = obj
        .get("key facts")
        .or_else(|| obj.get("key_facts"))
        .or_else(|| obj.get("keyfacts"))
    else {
        return ParseOutcome::failed(FailureReason::WrongSchema);
    };

    let mut warnings = Vec::new();
    let mut keyfacts = Vec::new();
    for (i, entry) in raw_list.iter().enumerate() {
        let Value::String(s) = entry else {
            return ParseOutcome::Failed {
                reason: FailureReason::WrongSchema,
                warnings,
            };
        };
        let s = s.trim();
        if s.is_empty() {
            warnings.push(ParseWarning::EmptyKeyfactDropped { index: i + 1 });
            continue;
        }
        keyfacts.push(s.to_string());
    }
    if keyfacts.is_empty() {
        return ParseOutcome::Failed {
            reason: FailureReason::WrongSchema,
            warnings,
        };
    }
    if keyfacts.len() > MACHINE_KEYFACT_CAP {
        warnings.push(ParseWarning::KeyfactsTruncated {
            kept: MACHINE_KEYFACT_CAP,
            got: keyfacts.len(),
        });
        keyfacts.truncate(MACHINE_KEYFACT_CAP);
    }
    ParseOutcome::Ok {
        payload: KeyfactList {
            instance_id: instance_id.to_string(),
            keyfacts,
            origin: KeyfactOrigin::Machine,
        },
        warnings,
    }
}

/// Fraction of outcomes that parsed, as an exact rational.
pub fn success_ratio(outcomes: &[ParseSummary]) -> Result<Fraction, ParserError> {
    if outcomes.is_empty() {
        return Err(ParserError::EmptyInput);
    }
    let ok = outcomes.iter().filter(|o| o.is_ok()).count();
    Ok(Fraction::new(ok as u64, outcomes.len() as u64))
}
