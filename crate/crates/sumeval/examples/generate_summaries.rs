//! Summary generation: one prompt per document, output rows shaped as
//! evaluation instances so they feed straight back into `eval`.
//!
//! Run with: cargo run --example generate_summaries

use std::io::BufRead;
use std::path::Path;

use sumeval::gateway::{BackendConfig, Gateway};
use sumeval::model::Document;
use sumeval::pipeline::run_summarize;

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let file = std::fs::File::open(data.join("documents.jsonl")).unwrap();
    let documents: Vec<Document> = std::io::BufReader::new(file)
        .lines()
        .map(|line| serde_json::from_str(&line.unwrap()).unwrap())
        .collect();

    let gateway = Gateway::new(BackendConfig {
        fixtures_path: Some(data.join("fixtures.jsonl")),
        model_name: "mock-summarizer".into(),
        ..BackendConfig::default()
    })
    .unwrap();

    let run = run_summarize(&documents, &gateway);
    for row in &run.rows {
        println!("{}", serde_json::to_string_pretty(row).unwrap());
    }
    for note in &run.errors {
        println!("failed: {}: {}", note.instance_id, note.detail);
    }
}
