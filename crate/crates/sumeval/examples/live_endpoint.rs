//! Evaluation against a live OpenAI-compatible endpoint.
//!
//! Needs credentials; skips politely without them:
//!   export SUMEVAL_API_KEY=...
//!   export SUMEVAL_LIVE_ENDPOINT=https://api.openai.com/v1
//!   export SUMEVAL_LIVE_MODEL=gpt-4o-mini       # optional
//!   cargo run --example live_endpoint

use std::path::Path;

use sumeval::gateway::{BackendConfig, BackendKind, Gateway, API_KEY_ENV};
use sumeval::ingest::load_instances;
use sumeval::pipeline::{run_evaluation, RunConfig};

fn main() {
    let Ok(endpoint) = std::env::var("SUMEVAL_LIVE_ENDPOINT") else {
        eprintln!("set SUMEVAL_LIVE_ENDPOINT and {API_KEY_ENV} to run this example");
        return;
    };
    let model = std::env::var("SUMEVAL_LIVE_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into());

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let instances = load_instances(data.join("instances.jsonl")).unwrap();
    let gateway = match Gateway::new(BackendConfig {
        kind: BackendKind::OpenAiCompatibleHttp,
        endpoint_url: endpoint,
        model_name: model,
        parallelism: 2,
        cache_dir: Some(std::env::temp_dir().join("sumeval-live-cache")),
        ..BackendConfig::default()
    }) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return;
        }
    };

    let run = run_evaluation(&instances[..3], &RunConfig::default(), &gateway).unwrap();
    for row in &run.rows {
        println!(
            "{}: faithfulness {:?}, completeness {:?}, conciseness {:?} ({:?})",
            row.instance_id,
            row.scores.faithfulness,
            row.scores.completeness,
            row.scores.conciseness,
            row.scores.provenance
        );
    }
    for (task, ratio) in &run.summary.success_ratio {
        println!("success ratio [{task}]: {}/{}", ratio.ok, ratio.total);
    }
}
