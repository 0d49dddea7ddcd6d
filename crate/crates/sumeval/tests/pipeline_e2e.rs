//! End-to-end pipeline behavior over the mock backend.

mod common;

use std::fs;

use serde_json::json;
use sumeval::ingest::load_instances;
use sumeval::model::{Document, Fraction, Provenance};
use sumeval::pipeline::{
    load_results, run_evaluation, run_keyfact_extraction, run_summarize, write_results,
    KeyfactSource, RunConfig,
};

use common::MockEnv;

#[test]
fn worked_example_scores_end_to_end() {
    let env = MockEnv::new(
        &[common::worked_example_instance("fig", "sysA")],
        &common::worked_example_fixtures("fig"),
    );
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();

    assert_eq!(run.rows.len(), 1);
    let row = &run.rows[0];
    assert_eq!(row.scores_exact.faithfulness, Some(Fraction::new(1, 3)));
    assert_eq!(row.scores_exact.completeness, Some(Fraction::new(3, 4)));
    assert_eq!(row.scores_exact.conciseness, Some(Fraction::new(2, 3)));
    assert_eq!(row.scores.provenance, Provenance::Computed);
    assert!(run.summary.errors.is_empty());
    assert!(run.summary.success_ratio["fact_check"].ratio.unwrap().is_one());
    assert!(run.summary.success_ratio["alignment"].ratio.unwrap().is_one());
}

#[test]
fn results_are_self_consistent() {
    let env = MockEnv::new(
        &[common::worked_example_instance("fig", "sysA")],
        &common::worked_example_fixtures("fig"),
    );
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();
    let row = &run.rows[0];

    // Recomputing the scoring operations from the emitted verdicts and
    // alignment reproduces the emitted scores exactly.
    let verdicts = row.typed_verdicts().unwrap();
    let graph = row.typed_alignment().unwrap();
    let n = verdicts.len();
    let m = graph.entries.len();
    assert_eq!(
        sumeval::scoring::faithfulness(&verdicts, n).unwrap(),
        row.scores_exact.faithfulness.unwrap()
    );
    assert_eq!(
        sumeval::scoring::completeness(&graph, m).unwrap(),
        row.scores_exact.completeness.unwrap()
    );
    assert_eq!(
        sumeval::scoring::conciseness(&graph, n).unwrap(),
        row.scores_exact.conciseness.unwrap()
    );
}

#[test]
fn non_json_reply_gets_failure_default_and_lowers_success_ratio() {
    let env = MockEnv::new(
        &[
            common::worked_example_instance("good", "sysA"),
            common::worked_example_instance("bad", "sysA"),
        ],
        &[
            common::worked_example_fixtures("good"),
            vec![
                json!({"instance_id": "bad", "task": "fact_check",
                       "response": "I cannot help with that."}),
                json!({"instance_id": "bad", "task": "keyfact_alignment",
                       "response": common::alignment_reply()}),
            ],
        ]
        .concat(),
    );
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();

    let bad = run.rows.iter().find(|r| r.instance_id == "bad").unwrap();
    assert_eq!(bad.scores.provenance, Provenance::FailureDefault);
    assert_eq!(bad.scores_exact.faithfulness, Some(Fraction::ONE));
    assert_eq!(bad.scores_exact.completeness, Some(Fraction::ZERO));
    assert_eq!(bad.scores_exact.conciseness, Some(Fraction::ZERO));
    assert!(bad.verdicts.is_none());

    assert_eq!(
        run.summary.success_ratio["fact_check"].ratio.unwrap(),
        Fraction::new(1, 2)
    );
    assert_eq!(run.summary.counts.failure_defaults, 1);
}

#[test]
fn repeated_runs_write_byte_identical_results() {
    let instances_json: Vec<serde_json::Value> = (0..5)
        .map(|i| common::worked_example_instance(&format!("i{i}"), "sysA"))
        .collect();
    let fixtures: Vec<serde_json::Value> = (0..5)
        .flat_map(|i| common::worked_example_fixtures(&format!("i{i}")))
        .collect();
    let env = MockEnv::new(&instances_json, &fixtures);
    let instances = load_instances(&env.instances_path).unwrap();

    let gateway = env.gateway_with_cache("cache");
    let cfg = RunConfig::default();
    let out1 = env.dir.path().join("run1.jsonl");
    let out2 = env.dir.path().join("run2.jsonl");

    let run1 = run_evaluation(&instances, &cfg, &gateway).unwrap();
    write_results(&out1, &run1.rows).unwrap();
    // Second run hits the cache; outputs must not change.
    let run2 = run_evaluation(&instances, &cfg, &gateway).unwrap();
    write_results(&out2, &run2.rows).unwrap();

    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
    assert_eq!(
        serde_json::to_string(&run1.summary).unwrap(),
        serde_json::to_string(&run2.summary).unwrap()
    );

    let reloaded = load_results(&out1).unwrap();
    assert_eq!(reloaded, run1.rows);
}

#[test]
fn extraction_feeds_alignment_and_caches_results() {
    let instance = json!({
        "instance_id": "x1",
        "system_id": "sysA",
        "document": common::DOCUMENT,
        "summary_sentences": common::SENTENCES,
        "reference": "The council approved the bridge on Monday. A rail line is part of the plan. Funding includes local bonds.",
    });
    let keyfact_obj = json!({"key facts": common::KEYFACTS}).to_string();
    let fixtures = vec![
        json!({"instance_id": "x1", "task": "keyfact_extraction", "response": keyfact_obj}),
        json!({"instance_id": "x1", "task": "fact_check", "response": common::fact_check_reply()}),
        json!({"instance_id": "x1", "task": "keyfact_alignment", "response": common::alignment_reply()}),
    ];
    let env = MockEnv::new(&[instance], &fixtures);
    let instances = load_instances(&env.instances_path).unwrap();
    let cache_path = env.dir.path().join("keyfacts-cache.jsonl");
    let cfg = RunConfig {
        keyfact_source: KeyfactSource::ExtractFromReference,
        keyfact_cache_path: Some(cache_path.clone()),
        ..RunConfig::default()
    };

    let run = run_evaluation(&instances, &cfg, &env.gateway()).unwrap();
    assert_eq!(
        run.rows[0].scores_exact.completeness,
        Some(Fraction::new(3, 4))
    );
    assert!(cache_path.exists());

    // A second run must reuse the cache: strip the extraction fixture and
    // the run still succeeds.
    let fixtures_no_extraction = &fixtures[1..];
    common::write_jsonl(&env.fixtures_path, fixtures_no_extraction);
    let run2 = run_evaluation(&instances, &cfg, &env.gateway()).unwrap();
    assert_eq!(
        run2.rows[0].scores_exact.completeness,
        Some(Fraction::new(3, 4))
    );
    assert!(run2.summary.errors.is_empty());
}

#[test]
fn missing_keyfacts_for_alignment_is_recorded_not_fatal() {
    let instance = json!({
        "instance_id": "nokf",
        "system_id": "sysA",
        "document": common::DOCUMENT,
        "summary_sentences": common::SENTENCES,
    });
    let fixtures = vec![json!({
        "instance_id": "nokf", "task": "fact_check", "response": common::fact_check_reply()
    })];
    let env = MockEnv::new(&[instance], &fixtures);
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();

    assert_eq!(run.rows[0].scores.provenance, Provenance::FailureDefault);
    assert!(run
        .summary
        .errors
        .iter()
        .any(|e| e.instance_id == "nokf" && e.detail.contains("keyfacts")));
    // No alignment prompt was sent, so the ratio has no denominator.
    assert_eq!(run.summary.success_ratio["alignment"].total, 0);
}

#[test]
fn degenerate_empty_summary_scores_failure_default() {
    let instance = json!({
        "instance_id": "empty",
        "system_id": "sysA",
        "document": common::DOCUMENT,
        "summary_sentences": [],
        "keyfacts": common::KEYFACTS,
    });
    let env = MockEnv::new(&[instance], &[]);
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();
    assert_eq!(run.rows[0].scores.provenance, Provenance::FailureDefault);
    assert_eq!(run.summary.counts.degenerate_summaries, 1);
}

#[test]
fn overlong_prompts_are_flagged_not_truncated() {
    let huge_document = "word ".repeat(8000); // ~40k characters
    let instance = json!({
        "instance_id": "big",
        "system_id": "sysA",
        "document": huge_document,
        "summary_sentences": common::SENTENCES,
        "keyfacts": common::KEYFACTS,
    });
    let env = MockEnv::new(&[instance], &common::worked_example_fixtures("big"));
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_evaluation(&instances, &RunConfig::default(), &env.gateway()).unwrap();
    assert!(run
        .summary
        .errors
        .iter()
        .any(|e| e.instance_id == "big" && e.detail.contains("characters")));
    // The prompt still went out whole: scores computed normally.
    assert_eq!(run.rows[0].scores.provenance, Provenance::Computed);
}

#[test]
fn keyfact_extraction_run_emits_rows_and_errors() {
    let rows = vec![
        json!({"instance_id": "a", "system_id": "s", "document": "d",
               "summary": "x.", "reference": "Five facts live here."}),
        json!({"instance_id": "b", "system_id": "s", "document": "d",
               "summary": "x.", "reference": "Twenty facts live here."}),
        json!({"instance_id": "c", "system_id": "s", "document": "d", "summary": "x."}),
    ];
    let five: Vec<String> = (1..=5).map(|i| format!("fact {i}")).collect();
    let twenty: Vec<String> = (1..=20).map(|i| format!("fact {i}")).collect();
    let fixtures = vec![
        json!({"instance_id": "a", "task": "keyfact_extraction",
               "response": json!({"key facts": five}).to_string()}),
        json!({"instance_id": "b", "task": "keyfact_extraction",
               "response": json!({"key facts": twenty}).to_string()}),
    ];
    let env = MockEnv::new(&rows, &fixtures);
    let instances = load_instances(&env.instances_path).unwrap();
    let run = run_keyfact_extraction(&instances, "reference", &env.gateway());

    assert_eq!(run.lists.len(), 2);
    assert_eq!(run.lists[0].keyfacts.len(), 5);
    assert_eq!(run.lists[1].keyfacts.len(), 16, "capped at 16");
    assert_eq!(run.errors.len(), 1);
    assert_eq!(run.errors[0].instance_id, "c");
    assert!(run.errors[0].detail.contains("reference"));
}

#[test]
fn summarize_run_yields_rows_keyed_by_model() {
    let docs = vec![
        Document::new("d1", "First document text."),
        Document::new("d2", "Second document text."),
        Document::new("d3", "Third document text."),
    ];
    let fixtures = vec![
        json!({"instance_id": "d1", "task": "summarize", "response": "Summary one."}),
        json!({"instance_id": "d2", "task": "summarize", "response": "Summary two."}),
        // d3 has no fixture: transport error.
    ];
    let env = MockEnv::new(&[], &fixtures);
    let run = run_summarize(&docs, &env.gateway());
    assert_eq!(run.rows.len(), 2);
    assert_eq!(run.rows[0].system_id, "mock");
    assert_eq!(run.rows[0].summary, "Summary one.");
    assert_eq!(run.errors.len(), 1);
    assert_eq!(run.errors[0].instance_id, "d3");
}
