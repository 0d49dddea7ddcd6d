//! Rule-based sentence segmentation.
//!
//! A boundary is a terminal (. ! ?), optionally followed by closing quotes
//! or brackets, followed by whitespace and a capital letter, opening quote,
//! or digit. Periods that close a known abbreviation ("Dr.", "U.S.", "e.g.")
//! never split, and a handful of numeric abbreviations ("No.", "Fig.") only
//! suppress a split when the next token is a digit. Decimal numbers are safe
//! because a decimal point is never followed by whitespace.
//!
//! The splitter only ever cuts inside whitespace runs, so joining the output
//! with single spaces preserves every non-whitespace character in order.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("degenerate input: no sentences remain after segmentation")]
    DegenerateInput,
}

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "etc.", "e.g.", "i.e.",
    "u.s.", "u.k.", "u.n.", "u.s.a.", "inc.", "ltd.", "co.", "corp.", "gov.", "sen.", "rep.",
    "gen.", "capt.", "sgt.", "lt.", "col.", "cmdr.", "dept.", "jan.", "feb.", "apr.", "aug.",
    "sept.", "oct.", "nov.", "dec.", "a.m.", "p.m.", "ph.d.", "m.d.", "b.a.", "m.a.", "ave.",
    "blvd.", "rd.", "mt.", "ft.",
];

/// Abbreviations that only suppress a split when followed by a digit
/// ("No. 5", "Fig. 2"); "I said no." should still end a sentence.
const NUMERIC_ABBREVIATIONS: &[&str] = &["no.", "fig.", "est.", "approx.", "pp.", "vol."];

fn is_closer(ch: char) -> bool {
    matches!(ch, '"' | '\'' | '\u{201D}' | '\u{2019}' | ')' | ']')
}

fn is_opener(ch: char) -> bool {
    matches!(ch, '"' | '\'' | '\u{201C}' | '\u{2018}' | '(' | '[')
}

fn is_sentence_start(ch: char) -> bool {
    ch.is_uppercase() || ch.is_ascii_digit() || is_opener(ch)
}

/// The token ending at the period, stripped of leading punctuation and
/// lowercased, e.g. `"(e.g." -> "e.g."`.
fn token_ending_at(text: &str, dot_end: usize) -> String {
    let prefix = &text[..dot_end];
    let token_start = prefix
        .rfind(char::is_whitespace)
        .map(|i| i + text[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    prefix[token_start..]
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Splits text into trimmed, non-empty sentences in input order.
pub fn segment_sentences(summary_text: &str) -> Result<Vec<String>, SegmentError> {
    let mut sentences = Vec::new();
    let mut start = 0usize;

    let chars: Vec<(usize, char)> = summary_text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (_, ch) = chars[i];
        if !matches!(ch, '.' | '!' | '?') {
            i += 1;
            continue;
        }

        // Include any run of closing quotes/brackets in this sentence.
        let mut j = i + 1;
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }

        // Require whitespace, then find the next non-whitespace char.
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k == j || k == chars.len() {
            // No whitespace (mid-token period, e.g. "3.14" or "U.S.")
            // or end of text; the tail is flushed after the loop.
            i = j.max(i + 1);
            continue;
        }

        if !is_sentence_start(chars[k].1) {
            i = j;
            continue;
        }

        if ch == '.' {
            let dot_end = chars[i].0 + 1;
            let token = token_ending_at(summary_text, dot_end);
            if ABBREVIATIONS.contains(&token.as_str()) {
                i = j;
                continue;
            }
            if NUMERIC_ABBREVIATIONS.contains(&token.as_str()) && chars[k].1.is_ascii_digit() {
                i = j;
                continue;
            }
            // Single-letter initials ("F. M. Last") are not boundaries.
            if token.len() == 2 && token.starts_with(|c: char| c.is_alphabetic()) {
                i = j;
                continue;
            }
        }

        let end = if j < chars.len() {
            chars[j].0
        } else {
            summary_text.len()
        };
        let piece = summary_text[start..end].trim();
        if !piece.is_empty() {
            sentences.push(piece.to_string());
        }
        start = chars[k].0;
        i = k;
    }

    let tail = summary_text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }

    if sentences.is_empty() {
        return Err(SegmentError::DegenerateInput);
    }
    Ok(sentences)
}
