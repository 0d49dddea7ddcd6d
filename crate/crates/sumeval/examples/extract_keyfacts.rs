//! Keyfact extraction from a reference summary, via the mock backend.
//! Machine lists are capped at 16 entries.
//!
//! Run with: cargo run --example extract_keyfacts

use std::path::Path;

use sumeval::gateway::{BackendConfig, Gateway};
use sumeval::ingest::load_instances;
use sumeval::pipeline::run_keyfact_extraction;

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let instances = load_instances(data.join("instances.jsonl")).unwrap();
    let gateway = Gateway::new(BackendConfig {
        fixtures_path: Some(data.join("fixtures.jsonl")),
        ..BackendConfig::default()
    })
    .unwrap();

    let run = run_keyfact_extraction(&instances, "reference", &gateway);
    for list in &run.lists {
        println!(
            "{} ({:?}, {} keyfacts):",
            list.instance_id,
            list.origin,
            list.keyfacts.len()
        );
        for (i, keyfact) in list.keyfacts.iter().enumerate() {
            println!("  [{}] {keyfact}", i + 1);
        }
    }
    println!();
    // Instances without the reference field are reported, not silently skipped.
    for note in &run.errors {
        println!("skipped: {}: {}", note.instance_id, note.detail);
    }
}
