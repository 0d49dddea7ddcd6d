//! Inter-run stability: repeated runs over the same instances, compared
//! per dimension with interval-metric Krippendorff's alpha. The mock
//! backend is deterministic, so agreement is exactly 1.0; a perturbed
//! third run shows the alpha dropping.
//!
//! Run with: cargo run --example inter_run_stability

use std::path::Path;

use sumeval::gateway::{BackendConfig, Gateway};
use sumeval::ingest::load_instances;
use sumeval::meta::stability_report;
use sumeval::model::Fraction;
use sumeval::pipeline::{run_evaluation, ResultsRow, RunConfig};

fn score_table(rows: &[ResultsRow]) -> Vec<(String, sumeval::model::ScoreTriple)> {
    rows.iter()
        .map(|r| (r.instance_id.clone(), r.score_triple()))
        .collect()
}

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let instances = load_instances(data.join("instances.jsonl")).unwrap();
    let gateway = Gateway::new(BackendConfig {
        fixtures_path: Some(data.join("fixtures.jsonl")),
        ..BackendConfig::default()
    })
    .unwrap();
    let cfg = RunConfig::default();

    let run1 = run_evaluation(&instances, &cfg, &gateway).unwrap();
    let run2 = run_evaluation(&instances, &cfg, &gateway).unwrap();

    let report = stability_report(&[score_table(&run1.rows), score_table(&run2.rows)]).unwrap();
    println!("two deterministic runs:");
    for (dimension, alpha) in &report.alpha {
        println!(
            "  {dimension}: alpha = {:?}, max delta = {}",
            alpha, report.max_pairwise_delta[dimension]
        );
    }

    // Perturb one instance's faithfulness to simulate a flaky evaluator.
    let mut shaky = score_table(&run1.rows);
    if let Some(first) = shaky.first_mut() {
        first.1.faithfulness = Some(Fraction::new(9, 10));
    }
    let report =
        stability_report(&[score_table(&run1.rows), score_table(&run2.rows), shaky]).unwrap();
    println!("with one perturbed run:");
    for (dimension, alpha) in &report.alpha {
        println!(
            "  {dimension}: alpha = {:?}, max delta = {:.4}",
            alpha, report.max_pairwise_delta[dimension]
        );
    }
}
