//! Robust JSON extraction from messy LLM text, and the task parsers with
//! their failure taxonomy.
//!
//! Run with: cargo run --example parse_llm_replies

use sumeval::parser::{extract_json, parse_alignment, parse_fact_check, ParseMode, ParseOutcome};

fn show<T: std::fmt::Debug>(label: &str, outcome: &ParseOutcome<T>) {
    match outcome {
        ParseOutcome::Ok { payload, warnings } => {
            println!("{label}: ok ({} warnings)\n  {payload:?}", warnings.len());
            for w in warnings {
                println!("  warning: {w:?}");
            }
        }
        ParseOutcome::Failed { reason, .. } => {
            println!("{label}: failed ({})", reason.as_str());
        }
    }
}

fn main() {
    // The extractor finds the earliest balanced candidate that parses.
    for raw in [
        "```json\n[{\"a\": 1}]\n```",
        "Sure! Here is the result: {\"key facts\": [\"x\"]} hope this helps",
        "I cannot help with that.",
    ] {
        println!("extract_json({raw:?})\n  -> {:?}\n", extract_json(raw));
    }

    let reply = r#"Of course. ```json
[{"sentence": "s1", "reason": "supported", "category": "no error"},
 {"sentence": "s2", "reason": "wrong name", "category": "Entity Error"},
 {"sentence": "s3", "reason": "invented", "category": "out-of-context error"}]
```"#;
    show("fact check (N=3)", &parse_fact_check(reply, 3, ParseMode::Strict));

    // Coverage failures are classified, never silently patched.
    show(
        "fact check, one of three",
        &parse_fact_check(r#"[{"category": "no error"}]"#, 3, ParseMode::Strict),
    );

    // Unknown categories: strict fails, lenient coerces to "other error".
    let odd = r#"[{"category": "hallucination-ish"}, {"category": "no error"}]"#;
    show("unknown category, strict", &parse_fact_check(odd, 2, ParseMode::Strict));
    show(
        "unknown category, lenient",
        &parse_fact_check(odd, 2, ParseMode::Lenient),
    );

    // Alignment: out-of-range lines are dropped with a warning; a "No"
    // forces the line set empty.
    let alignment = r#"[
        {"key fact": "k1", "response": "Yes", "line numbers": [1, 7]},
        {"key fact": "k2", "response": "No", "line numbers": [2]}
    ]"#;
    show(
        "alignment (M=2, N=3)",
        &parse_alignment(alignment, 2, 3, ParseMode::Strict),
    );
}
