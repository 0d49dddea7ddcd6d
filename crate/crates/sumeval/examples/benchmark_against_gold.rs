//! Meta-evaluation: run the pipeline over the bundled dataset, join with
//! gold annotations, and print the agreement report. One instance has a
//! deliberately broken reply, so the strict-mode exclusion shows up.
//!
//! Run with: cargo run --example benchmark_against_gold

use std::path::Path;

use sumeval::benchmark::{compute_benchmark, BenchmarkOptions};
use sumeval::gateway::{BackendConfig, Gateway};
use sumeval::ingest::{load_gold, load_instances};
use sumeval::pipeline::{run_evaluation, RunConfig};
use sumeval::report::{render, ReportFormat};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let instances = load_instances(data.join("instances.jsonl")).unwrap();
    let gateway = Gateway::new(BackendConfig {
        fixtures_path: Some(data.join("fixtures.jsonl")),
        ..BackendConfig::default()
    })
    .unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &gateway).unwrap();

    let gold = load_gold(data.join("gold.jsonl")).unwrap();
    let opts = BenchmarkOptions {
        permutations: 500,
        seed: 7,
        ..BenchmarkOptions::default()
    };
    let report = compute_benchmark(&run.rows, &gold, &opts).unwrap();

    println!("{}", render(&report, ReportFormat::Markdown));
}
