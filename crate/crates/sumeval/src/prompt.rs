//! Prompt rendering for the four tasks, from versioned plain-text templates.
//!
//! Templates live under `templates/` and are addressed by a
//! `task.feature1+feature2.txt` key (`basic` for the empty feature set,
//! `default` for the two fixed-form tasks). Rendering is pure string
//! substitution: same inputs, byte-identical output.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The four prompt-driven tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    FactCheck,
    KeyfactAlignment,
    KeyfactExtraction,
    Summarize,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::FactCheck => "fact_check",
            Task::KeyfactAlignment => "keyfact_alignment",
            Task::KeyfactExtraction => "keyfact_extraction",
            Task::Summarize => "summarize",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prompt-engineering features that variants may toggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Instruction,
    Categorization,
    Reasoning,
    EvidenceMapping,
}

impl Feature {
    /// Canonical ordering used in template keys.
    pub const ALL: [Feature; 4] = [
        Feature::Instruction,
        Feature::Categorization,
        Feature::Reasoning,
        Feature::EvidenceMapping,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Feature::Instruction => "instruction",
            Feature::Categorization => "categorization",
            Feature::Reasoning => "reasoning",
            Feature::EvidenceMapping => "evidence_mapping",
        }
    }
}

/// A (task, feature-set) pair naming one concrete prompt form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVariant {
    pub task: Task,
    pub features: BTreeSet<Feature>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("variant mismatch: {task} does not allow feature set {features:?}")]
    VariantMismatch { task: Task, features: String },
    #[error("variant mismatch: expected task {expected}, got {got}")]
    WrongTask { expected: Task, got: Task },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("unknown variant spec {0:?}")]
    UnknownSpec(String),
}

impl PromptVariant {
    pub fn new(task: Task, features: impl IntoIterator<Item = Feature>) -> Self {
        Self {
            task,
            features: features.into_iter().collect(),
        }
    }

    pub fn basic(task: Task) -> Self {
        Self::new(task, [])
    }

    /// The recommended default for each task.
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::FactCheck => Self::new(
                task,
                [
                    Feature::Instruction,
                    Feature::Categorization,
                    Feature::Reasoning,
                ],
            ),
            Task::KeyfactAlignment => Self::new(task, [Feature::Instruction]),
            Task::KeyfactExtraction | Task::Summarize => Self::basic(task),
        }
    }

    /// Parses a `+`-joined feature list, or `basic`/`default`.
    pub fn parse(task: Task, spec: &str) -> Result<Self, PromptError> {
        let spec = spec.trim();
        if spec.is_empty() || spec == "basic" || spec == "default" {
            let v = if spec == "default" {
                Self::default_for(task)
            } else {
                Self::basic(task)
            };
            return v.validate().map(|_| v);
        }
        let mut features = BTreeSet::new();
        for part in spec.split('+') {
            let feature = match part.trim() {
                "instruction" => Feature::Instruction,
                "categorization" => Feature::Categorization,
                "reasoning" => Feature::Reasoning,
                "evidence_mapping" | "evidence-mapping" => Feature::EvidenceMapping,
                other => return Err(PromptError::UnknownSpec(other.to_string())),
            };
            features.insert(feature);
        }
        let v = Self { task, features };
        v.validate()?;
        Ok(v)
    }

    fn feature_key(&self) -> String {
        if self.features.is_empty() {
            return match self.task {
                Task::KeyfactExtraction | Task::Summarize => "default".to_string(),
                _ => "basic".to_string(),
            };
        }
        Feature::ALL
            .iter()
            .filter(|f| self.features.contains(f))
            .map(|f| f.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Template key in the `task.features.txt` form.
    pub fn template_key(&self) -> String {
        format!("{}.{}.txt", self.task, self.feature_key())
    }

    pub fn has(&self, feature: Feature) -> bool {
        self.features.contains(&feature)
    }

    /// Checks the feature set against the allowed rows for the task.
    pub fn validate(&self) -> Result<(), PromptError> {
        use Feature::*;
        let allowed: &[&[Feature]] = match self.task {
            Task::FactCheck => &[
                &[],
                &[Instruction, Categorization],
                &[Instruction, Categorization, Reasoning],
                &[Instruction, Categorization, EvidenceMapping],
                &[Instruction, Categorization, Reasoning, EvidenceMapping],
            ],
            Task::KeyfactAlignment => &[&[], &[Instruction], &[Instruction, Reasoning]],
            Task::KeyfactExtraction | Task::Summarize => &[&[]],
        };
        let ok = allowed
            .iter()
            .any(|set| set.len() == self.features.len() && set.iter().all(|f| self.has(*f)));
        if ok {
            Ok(())
        } else {
            Err(PromptError::VariantMismatch {
                task: self.task,
                features: self.feature_key(),
            })
        }
    }
}

/// The JSON (or plain-text) shape the reply is expected to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedSchema {
    FactCheckArray,
    AlignmentArray,
    KeyfactObject,
    PlainSummary,
}

/// A fully rendered prompt plus what the parser should expect back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub expected_schema: ExpectedSchema,
    /// N for fact checking, M for alignment, 0 otherwise.
    pub expected_count: usize,
    pub template_key: String,
    pub template_version: String,
}

struct Template {
    key: &'static str,
    text: &'static str,
}

macro_rules! template {
    ($key:literal) => {
        Template {
            key: $key,
            text: include_str!(concat!("../templates/", $key)),
        }
    };
}

const TEMPLATES: &[Template] = &[
    template!("fact_check.basic.txt"),
    template!("fact_check.instruction+categorization.txt"),
    template!("fact_check.instruction+categorization+reasoning.txt"),
    template!("fact_check.instruction+categorization+evidence_mapping.txt"),
    template!("fact_check.instruction+categorization+reasoning+evidence_mapping.txt"),
    template!("keyfact_alignment.basic.txt"),
    template!("keyfact_alignment.instruction.txt"),
    template!("keyfact_alignment.instruction+reasoning.txt"),
    template!("keyfact_extraction.default.txt"),
    template!("summarize.default.txt"),
];

fn template_text(key: &str) -> &'static str {
    TEMPLATES
        .iter()
        .find(|t| t.key == key)
        .unwrap_or_else(|| panic!("no template registered for key {key:?}"))
        .text
}

/// Short content hash identifying a template revision.
pub fn template_version(key: &str) -> String {
    let digest = Sha256::digest(template_text(key).as_bytes());
    hex::encode(&digest[..6])
}

/// All registered template keys with their versions.
pub fn template_inventory() -> Vec<(String, String)> {
    TEMPLATES
        .iter()
        .map(|t| (t.key.to_string(), template_version(t.key)))
        .collect()
}

/// Numbers items as `[k] text` lines, 1-based.
fn numbered_block(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("[{}] {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}

/// Renders the fact-checking prompt over the document and numbered sentences.
pub fn render_fact_check(
    document: &str,
    sentences: &[String],
    variant: &PromptVariant,
) -> Result<RenderedPrompt, PromptError> {
    if variant.task != Task::FactCheck {
        return Err(PromptError::WrongTask {
            expected: Task::FactCheck,
            got: variant.task,
        });
    }
    variant.validate()?;
    if sentences.is_empty() {
        return Err(PromptError::EmptyInput("sentences"));
    }
    if document.is_empty() {
        return Err(PromptError::EmptyInput("document"));
    }
    let key = variant.template_key();
    let text = fill(
        template_text(&key),
        &[
            ("document", document.to_string()),
            ("num_sentences", sentences.len().to_string()),
            ("sentences", numbered_block(sentences)),
        ],
    );
    Ok(RenderedPrompt {
        text,
        expected_schema: ExpectedSchema::FactCheckArray,
        expected_count: sentences.len(),
        template_version: template_version(&key),
        template_key: key,
    })
}

/// Renders the keyfact-alignment prompt over numbered sentences and keyfacts.
pub fn render_alignment(
    keyfacts: &[String],
    sentences: &[String],
    variant: &PromptVariant,
) -> Result<RenderedPrompt, PromptError> {
    if variant.task != Task::KeyfactAlignment {
        return Err(PromptError::WrongTask {
            expected: Task::KeyfactAlignment,
            got: variant.task,
        });
    }
    variant.validate()?;
    if keyfacts.is_empty() {
        return Err(PromptError::EmptyInput("keyfacts"));
    }
    if sentences.is_empty() {
        return Err(PromptError::EmptyInput("sentences"));
    }
    let key = variant.template_key();
    let text = fill(
        template_text(&key),
        &[
            ("num_sentences", sentences.len().to_string()),
            ("sentences", numbered_block(sentences)),
            ("num_keyfacts", keyfacts.len().to_string()),
            ("keyfacts", numbered_block(keyfacts)),
        ],
    );
    Ok(RenderedPrompt {
        text,
        expected_schema: ExpectedSchema::AlignmentArray,
        expected_count: keyfacts.len(),
        template_version: template_version(&key),
        template_key: key,
    })
}

/// Renders the fixed keyfact-extraction prompt (few-shot, capped at 16).
pub fn render_keyfact_extraction(reference_summary: &str) -> Result<RenderedPrompt, PromptError> {
    if reference_summary.trim().is_empty() {
        return Err(PromptError::EmptyInput("reference_summary"));
    }
    let key = "keyfact_extraction.default.txt".to_string();
    let text = fill(
        template_text(&key),
        &[("reference_summary", reference_summary.to_string())],
    );
    Ok(RenderedPrompt {
        text,
        expected_schema: ExpectedSchema::KeyfactObject,
        expected_count: 0,
        template_version: template_version(&key),
        template_key: key,
    })
}

/// Renders the fixed summarization prompt.
pub fn render_summarize(document: &str) -> Result<RenderedPrompt, PromptError> {
    if document.trim().is_empty() {
        return Err(PromptError::EmptyInput("document"));
    }
    let key = "summarize.default.txt".to_string();
    let text = fill(template_text(&key), &[("document", document.to_string())]);
    Ok(RenderedPrompt {
        text,
        expected_schema: ExpectedSchema::PlainSummary,
        expected_count: 0,
        template_version: template_version(&key),
        template_key: key,
    })
}
