//! Shared domain types: the error-category taxonomy, per-sentence verdicts,
//! the keyfact-to-sentence alignment graph, and exact-fraction scores.
//!
//! Everything here is an immutable value object; safe to share across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound on machine-extracted keyfacts per instance.
pub const MACHINE_KEYFACT_CAP: usize = 16;

/// A source document to be summarized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// A model summary split into numbered sentences (1-based line numbers).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub instance_id: String,
    pub system_id: String,
    /// Sentence k has line number k+1; indices are contiguous 1..=N.
    pub sentences: Vec<String>,
}

impl SummaryRecord {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// An empty sentence list is representable but not scoreable.
    pub fn is_degenerate(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Where a keyfact list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyfactOrigin {
    Human,
    Machine,
}

/// An ordered list of keyfacts for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyfactList {
    pub instance_id: String,
    pub keyfacts: Vec<String>,
    pub origin: KeyfactOrigin,
}

impl KeyfactList {
    pub fn len(&self) -> usize {
        self.keyfacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyfacts.is_empty()
    }
}

/// The nine-way sentence-level factuality taxonomy: seven specific error
/// types, a catch-all, and the no-error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorCategory {
    /// OutE: information not present in the source (extrinsic).
    OutOfContext,
    /// EntE: primary arguments of the predicate are wrong.
    Entity,
    /// PredE: the predicate contradicts the source.
    Predicate,
    /// CirE: wrong circumstance (time, place, manner) around a predicate.
    Circumstance,
    /// GramE: grammar so broken the sentence is meaningless.
    Grammatical,
    /// LinkE: statements linked together incorrectly (ordering, causality).
    DiscourseLink,
    /// CorefE: pronoun/reference with a wrong or missing antecedent.
    Coreference,
    /// OtherE: an error outside the seven specific types.
    Other,
    /// No factual error detected.
    NoError,
}

impl ErrorCategory {
    /// All nine members, in taxonomy order.
    pub const ALL: [ErrorCategory; 9] = [
        ErrorCategory::OutOfContext,
        ErrorCategory::Entity,
        ErrorCategory::Predicate,
        ErrorCategory::Circumstance,
        ErrorCategory::Grammatical,
        ErrorCategory::DiscourseLink,
        ErrorCategory::Coreference,
        ErrorCategory::Other,
        ErrorCategory::NoError,
    ];

    /// The seven specific error types (everything except Other and NoError).
    pub const SPECIFIC_ERRORS: [ErrorCategory; 7] = [
        ErrorCategory::OutOfContext,
        ErrorCategory::Entity,
        ErrorCategory::Predicate,
        ErrorCategory::Circumstance,
        ErrorCategory::Grammatical,
        ErrorCategory::DiscourseLink,
        ErrorCategory::Coreference,
    ];

    /// Canonical long-form name, as used in the prompts.
    pub fn canonical(&self) -> &'static str {
        match self {
            ErrorCategory::OutOfContext => "out-of-context error",
            ErrorCategory::Entity => "entity error",
            ErrorCategory::Predicate => "predicate error",
            ErrorCategory::Circumstance => "circumstance error",
            ErrorCategory::Grammatical => "grammatical error",
            ErrorCategory::DiscourseLink => "discourse link error",
            ErrorCategory::Coreference => "coreference error",
            ErrorCategory::Other => "other error",
            ErrorCategory::NoError => "no error",
        }
    }

    /// Short code used in tables and reports.
    pub fn code(&self) -> &'static str {
        match self {
            ErrorCategory::OutOfContext => "OutE",
            ErrorCategory::Entity => "EntE",
            ErrorCategory::Predicate => "PredE",
            ErrorCategory::Circumstance => "CirE",
            ErrorCategory::Grammatical => "GramE",
            ErrorCategory::DiscourseLink => "LinkE",
            ErrorCategory::Coreference => "CorefE",
            ErrorCategory::Other => "OtherE",
            ErrorCategory::NoError => "NoError",
        }
    }

    /// True for the single extrinsic error type.
    pub fn is_extrinsic(&self) -> bool {
        matches!(self, ErrorCategory::OutOfContext)
    }

    /// True for the six intrinsic error types.
    pub fn is_intrinsic(&self) -> bool {
        matches!(
            self,
            ErrorCategory::Entity
                | ErrorCategory::Predicate
                | ErrorCategory::Circumstance
                | ErrorCategory::Grammatical
                | ErrorCategory::DiscourseLink
                | ErrorCategory::Coreference
        )
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

/// Maps a raw category string (as an LLM might phrase it) to the canonical
/// category. Case-insensitive, whitespace-trimmed, with a fixed synonym
/// table covering the short codes and common rephrasings. Unknown strings
/// return `None`; policy for unknowns (coerce vs. fail) lives in the parser.
pub fn normalize_category(raw: &str) -> Option<ErrorCategory> {
    let key: String = raw
        .trim()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let cat = match key.as_str() {
        "no error" | "no errors" | "noerror" => ErrorCategory::NoError,
        "out-of-context error"
        | "out of context error"
        | "out-of-context"
        | "out of context"
        | "oute" => ErrorCategory::OutOfContext,
        "entity error" | "entity" | "ente" => ErrorCategory::Entity,
        "predicate error" | "predicate" | "prede" => ErrorCategory::Predicate,
        "circumstance error" | "circumstantial error" | "circumstance" | "cire" => {
            ErrorCategory::Circumstance
        }
        "grammatical error" | "grammar error" | "grammatical" | "grame" => {
            ErrorCategory::Grammatical
        }
        "discourse link error" | "discourse error" | "linking error" | "discourse link"
        | "linke" => ErrorCategory::DiscourseLink,
        "coreference error" | "coreference" | "corefe" => ErrorCategory::Coreference,
        "other error" | "other errors" | "other" | "othere" => ErrorCategory::Other,
        _ => return None,
    };
    Some(cat)
}

/// Binary error flag derived from a category: everything except NoError
/// counts as an error.
pub fn derive_binary(category: ErrorCategory) -> bool {
    category != ErrorCategory::NoError
}

/// One fact-checking verdict for one summary sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCheckVerdict {
    /// 1-based line number into the summary.
    pub sentence_index: usize,
    pub category: ErrorCategory,
    pub reason: String,
}

impl FactCheckVerdict {
    pub fn has_error(&self) -> bool {
        derive_binary(self.category)
    }
}

/// Per-keyfact alignment entry: the binary match label and the set of
/// summary line numbers the keyfact is inferred from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyfactAlignment {
    /// 1-based index into the keyfact list.
    pub keyfact_index: usize,
    pub matched: bool,
    /// 1-based summary line numbers; empty whenever `matched` is false.
    pub line_numbers: BTreeSet<usize>,
}

/// Bipartite keyfact-to-sentence alignment for one instance, ordered by
/// keyfact index 1..=M.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentGraph {
    pub entries: Vec<KeyfactAlignment>,
}

impl AlignmentGraph {
    pub fn new(entries: Vec<KeyfactAlignment>) -> Self {
        for e in &entries {
            debug_assert!(e.matched || e.line_numbers.is_empty());
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Edge set E as (keyfact_index, sentence_index) pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries
            .iter()
            .flat_map(|e| e.line_numbers.iter().map(move |&s| (e.keyfact_index, s)))
    }

    pub fn matched_count(&self) -> usize {
        self.entries.iter().filter(|e| e.matched).count()
    }

    /// Distinct summary sentences that carry at least one edge.
    pub fn aligned_sentences(&self) -> BTreeSet<usize> {
        self.entries
            .iter()
            .flat_map(|e| e.line_numbers.iter().copied())
            .collect()
    }
}

/// An exact unreduced fraction `num/den` with `den >= 1`.
///
/// Scores are counts over N or M; the denominator is kept as counted so that
/// 1/3 never degrades to 0.333 before aggregation. Equality and ordering are
/// mathematical (cross-multiplied), so 2/4 == 1/2.
#[derive(Debug, Clone, Copy)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    /// Panics if `den == 0`; callers guarantee N >= 1 / M >= 1.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "fraction denominator must be nonzero");
        Self { num, den }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    fn reduced(&self) -> (u64, u64) {
        // den >= 1 always, so the gcd is nonzero.
        let g = gcd(self.num, self.den);
        (self.num / g, self.den / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.num as u128 * other.den as u128 == other.num as u128 * self.den as u128
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl std::hash::Hash for Fraction {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.reduced().hash(state);
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.num, self.den).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (num, den) = <(u64, u64)>::deserialize(deserializer)?;
        if den == 0 {
            return Err(serde::de::Error::custom("fraction denominator is zero"));
        }
        Ok(Fraction { num, den })
    }
}

/// How a score triple came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    /// Assigned when a required task's reply could not be parsed.
    FailureDefault,
}

/// The three percentage scores for one instance. Components are absent when
/// the corresponding task was not configured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub faithfulness: Option<Fraction>,
    pub completeness: Option<Fraction>,
    pub conciseness: Option<Fraction>,
    pub provenance: Provenance,
}

impl ScoreTriple {
    /// The fixed fallback triple: no summary content survives a parse
    /// failure, so nothing can hallucinate (1.0) and nothing aligns (0.0).
    pub fn failure_default() -> Self {
        Self {
            faithfulness: Some(Fraction::ONE),
            completeness: Some(Fraction::ZERO),
            conciseness: Some(Fraction::ZERO),
            provenance: Provenance::FailureDefault,
        }
    }

    pub fn is_failure_default(&self) -> bool {
        self.provenance == Provenance::FailureDefault
    }
}

/// Gold sentence label: the binary flag plus an optional specific category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSentenceLabel {
    pub index: usize,
    pub has_error: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<ErrorCategory>,
}

/// Gold keyfact label: the binary match flag plus optional gold line numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldKeyfactLabel {
    pub index: usize,
    pub matched: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line_numbers: Option<BTreeSet<usize>>,
}

/// Human annotations joined onto an instance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldAnnotations {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence_labels: Option<Vec<GoldSentenceLabel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keyfact_labels: Option<Vec<GoldKeyfactLabel>>,
}

/// One evaluation unit: a document, a summary (raw or pre-split), optional
/// keyfacts, and optional gold annotations. Mirrors the on-disk row shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub instance_id: String,
    pub system_id: String,
    pub document: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_sentences: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keyfacts: Option<Vec<String>>,
    #[serde(skip)]
    pub gold: Option<GoldAnnotations>,
    /// Extra row fields (e.g. a reference summary) preserved verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy_has_nine_members_and_one_no_error() {
        assert_eq!(ErrorCategory::ALL.len(), 9);
        let errors: Vec<_> = ErrorCategory::ALL
            .iter()
            .filter(|c| derive_binary(**c))
            .collect();
        assert_eq!(errors.len(), 8);
        assert!(!derive_binary(ErrorCategory::NoError));
    }

    #[test]
    fn intrinsic_extrinsic_partition() {
        assert!(ErrorCategory::OutOfContext.is_extrinsic());
        let intrinsic: Vec<_> = ErrorCategory::ALL
            .iter()
            .filter(|c| c.is_intrinsic())
            .collect();
        assert_eq!(intrinsic.len(), 6);
        assert!(!ErrorCategory::Other.is_intrinsic());
        assert!(!ErrorCategory::NoError.is_intrinsic());
        assert!(!ErrorCategory::NoError.is_extrinsic());
    }

    #[test]
    fn normalization_accepts_canonical_and_codes() {
        for cat in ErrorCategory::ALL {
            assert_eq!(normalize_category(cat.canonical()), Some(cat));
            assert_eq!(normalize_category(cat.code()), Some(cat));
            // idempotence: canonical string of the normalized value maps back
            let again = normalize_category(cat.canonical()).unwrap();
            assert_eq!(normalize_category(again.canonical()), Some(cat));
        }
    }

    #[test]
    fn normalization_trims_and_ignores_case() {
        assert_eq!(normalize_category("no error"), Some(ErrorCategory::NoError));
        assert_eq!(
            normalize_category("Entity Error "),
            Some(ErrorCategory::Entity)
        );
        assert_eq!(
            normalize_category("  OUT OF CONTEXT ERROR"),
            Some(ErrorCategory::OutOfContext)
        );
        assert_eq!(
            normalize_category("no   errors"),
            Some(ErrorCategory::NoError)
        );
    }

    #[test]
    fn normalization_rejects_unknown_strings() {
        assert_eq!(normalize_category("hallucination-ish"), None);
        assert_eq!(normalize_category(""), None);
        assert_eq!(normalize_category("banana"), None);
    }

    #[test]
    fn derive_binary_partitions_eight_to_one() {
        let (errors, fine): (Vec<&ErrorCategory>, Vec<&ErrorCategory>) =
            ErrorCategory::ALL.iter().partition(|c| derive_binary(**c));
        assert_eq!(errors.len(), 8);
        assert_eq!(fine, vec![&ErrorCategory::NoError]);
    }

    #[test]
    fn fraction_equality_is_mathematical() {
        assert_eq!(Fraction::new(1, 3), Fraction::new(2, 6));
        assert_ne!(Fraction::new(1, 3), Fraction::new(333, 1000));
        assert_eq!(Fraction::new(0, 5), Fraction::ZERO);
        assert_eq!(Fraction::new(4, 4), Fraction::ONE);
        assert!(Fraction::new(1, 3) < Fraction::new(1, 2));
    }

    #[test]
    fn fraction_keeps_raw_counts() {
        let f = Fraction::new(2, 4);
        assert_eq!(f.numerator(), 2);
        assert_eq!(f.denominator(), 4);
        assert_eq!(f.value(), 0.5);
    }

    #[test]
    #[should_panic]
    fn fraction_zero_denominator_panics() {
        let _ = Fraction::new(1, 0);
    }

    #[test]
    fn failure_default_is_exactly_one_zero_zero() {
        let t = ScoreTriple::failure_default();
        assert_eq!(t.faithfulness, Some(Fraction::ONE));
        assert_eq!(t.completeness, Some(Fraction::ZERO));
        assert_eq!(t.conciseness, Some(Fraction::ZERO));
        assert_eq!(t.faithfulness.unwrap().value(), 1.0);
        assert_eq!(t.completeness.unwrap().value(), 0.0);
        assert_eq!(t.conciseness.unwrap().value(), 0.0);
        assert!(t.is_failure_default());
    }

    #[test]
    fn alignment_graph_edges_and_unique_sentences() {
        let graph = AlignmentGraph::new(vec![
            KeyfactAlignment {
                keyfact_index: 1,
                matched: true,
                line_numbers: [1].into(),
            },
            KeyfactAlignment {
                keyfact_index: 2,
                matched: true,
                line_numbers: [1].into(),
            },
            KeyfactAlignment {
                keyfact_index: 3,
                matched: true,
                line_numbers: [3].into(),
            },
            KeyfactAlignment {
                keyfact_index: 4,
                matched: false,
                line_numbers: BTreeSet::new(),
            },
        ]);
        assert_eq!(graph.matched_count(), 3);
        assert_eq!(graph.aligned_sentences(), [1, 3].into());
        assert_eq!(graph.edges().count(), 3);
    }
}
