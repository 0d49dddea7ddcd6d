//! Fine-grained, backend-agnostic evaluation of text summarization.
//!
//! The evaluator scores each summary along three percentage dimensions by
//! running two LLM tasks (per-sentence fact checking and keyfact-to-sentence
//! alignment), then parsing the JSON replies and counting:
//!
//! * **faithfulness**: fraction of summary sentences with no factuality error
//! * **completeness**: fraction of keyfacts inferable from the summary
//! * **conciseness**: fraction of summary sentences aligned to some keyfact
//!
//! A meta-evaluation harness measures an evaluator's agreement with human
//! judgments at the sentence level (balanced accuracy), summary level
//! (Pearson/Spearman), and system level (rank correlation), plus error
//! localization accuracy, inter-annotator agreement coefficients, and
//! parse success ratios.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `sumeval` binary for the command-line surface.

pub mod benchmark;
pub mod cli;
pub mod gateway;
pub mod ingest;
pub mod meta;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod scoring;
pub mod segment;

pub use model::{
    derive_binary, normalize_category, AlignmentGraph, Document, ErrorCategory, EvalInstance,
    FactCheckVerdict, Fraction, GoldAnnotations, KeyfactList, KeyfactOrigin, Provenance,
    ScoreTriple, SummaryRecord,
};
pub use parser::{FailureReason, ParseMode, ParseOutcome};
pub use prompt::{ExpectedSchema, Feature, PromptVariant, RenderedPrompt, Task};
pub use scoring::TaskSet;
