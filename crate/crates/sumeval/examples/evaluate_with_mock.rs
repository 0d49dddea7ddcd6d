//! The full evaluation pipeline over the bundled dataset, using the mock
//! replay backend (no network, fully deterministic).
//!
//! Run with: cargo run --example evaluate_with_mock

use std::path::Path;

use sumeval::gateway::{BackendConfig, Gateway};
use sumeval::ingest::load_instances;
use sumeval::pipeline::{run_evaluation, RunConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let instances = load_instances(data.join("instances.jsonl")).unwrap();
    let gateway = Gateway::new(BackendConfig {
        fixtures_path: Some(data.join("fixtures.jsonl")),
        ..BackendConfig::default()
    })
    .unwrap();

    let run = run_evaluation(&instances, &RunConfig::default(), &gateway).unwrap();

    println!("{:<10} {:>13} {:>13} {:>12}  provenance", "instance", "faithfulness", "completeness", "conciseness");
    for row in &run.rows {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<10} {:>13} {:>13} {:>12}  {:?}",
            row.instance_id,
            fmt(row.scores.faithfulness),
            fmt(row.scores.completeness),
            fmt(row.scores.conciseness),
            row.scores.provenance,
        );
    }
    println!();
    for (task, ratio) in &run.summary.success_ratio {
        println!(
            "success ratio [{task}]: {}/{}",
            ratio.ok, ratio.total
        );
    }
    for note in &run.summary.errors {
        println!("note: {} [{}] {}", note.instance_id, note.stage, note.detail);
    }
}
