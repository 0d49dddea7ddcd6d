//! Command-line behavior, driven through the compiled binary.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

use common::MockEnv;

fn sumeval(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumeval"))
        .args(args)
        .current_dir(dir)
        .env_remove(sumeval::gateway::API_KEY_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

#[test]
fn eval_mock_writes_results_and_prints_summary() {
    let env = MockEnv::new(
        &[common::worked_example_instance("fig", "sysA")],
        &common::worked_example_fixtures("fig"),
    );
    let out_path = env.dir.path().join("results.jsonl");
    let output = sumeval(
        &[
            "eval",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--tasks",
            "both",
            "--out",
            out_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let results = fs::read_to_string(&out_path).unwrap();
    let row: serde_json::Value = serde_json::from_str(results.lines().next().unwrap()).unwrap();
    assert_eq!(row["scores_exact"]["faithfulness"], json!([1, 3]));
    assert_eq!(row["scores_exact"]["completeness"], json!([3, 4]));
    assert_eq!(row["scores_exact"]["conciseness"], json!([2, 3]));

    let summary: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(summary["config"]["tasks"], json!(["fact_check", "alignment"]));
    assert_eq!(summary["config"]["temperature"], json!(0.0));
    assert!(summary["config"]["templates"]
        .as_object()
        .unwrap()
        .contains_key("fact_check.instruction+categorization+reasoning.txt"));
}

#[test]
fn eval_exit_code_zero_despite_per_instance_failures() {
    let env = MockEnv::new(
        &[common::worked_example_instance("solo", "sysA")],
        &[json!({"instance_id": "solo", "task": "fact_check", "response": "not json"})],
    );
    let out_path = env.dir.path().join("results.jsonl");
    let output = sumeval(
        &[
            "eval",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let row: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&out_path).unwrap().lines().next().unwrap())
            .unwrap();
    assert_eq!(row["scores"]["provenance"], json!("failure_default"));
}

#[test]
fn alignment_without_keyfacts_is_a_config_error() {
    let instance = json!({
        "instance_id": "x", "system_id": "s",
        "document": "Doc.", "summary": "One sentence."
    });
    let env = MockEnv::new(&[instance], &[]);
    let output = sumeval(
        &[
            "eval",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--tasks",
            "alignment",
            "--out",
            env.dir.path().join("r.jsonl").to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(!output.status.success());
    assert!(stderr(&output).contains("keyfacts"), "{}", stderr(&output));
}

#[test]
fn openai_backend_without_key_names_the_env_var() {
    let env = MockEnv::new(
        &[common::worked_example_instance("a", "s")],
        &[],
    );
    let output = sumeval(
        &[
            "eval",
            "--backend",
            "openai",
            "--endpoint",
            "http://localhost:9/v1",
            "--input",
            env.instances_path.to_str().unwrap(),
            "--out",
            env.dir.path().join("r.jsonl").to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(!output.status.success());
    assert!(
        stderr(&output).contains("SUMEVAL_API_KEY"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn benchmark_perfect_predictions_report_ones() {
    let ids = ["a", "b", "c", "d"];
    let flags = [
        vec![false, true, false],
        vec![true, false, false],
        vec![false, false, true],
        vec![true, true, false],
    ];
    let instances: Vec<serde_json::Value> = ids
        .iter()
        .zip(&flags)
        .map(|(id, f)| {
            json!({
                "instance_id": id, "system_id": format!("sys-{id}"),
                "document": common::DOCUMENT,
                "summary_sentences": common::SENTENCES[..f.len()],
                "keyfacts": common::KEYFACTS,
            })
        })
        .collect();
    let fixtures: Vec<serde_json::Value> = ids
        .iter()
        .zip(&flags)
        .flat_map(|(id, f)| {
            let verdicts: Vec<serde_json::Value> = f
                .iter()
                .map(|&has_error| {
                    json!({"category": if has_error { "entity error" } else { "no error" }})
                })
                .collect();
            vec![
                json!({"instance_id": id, "task": "fact_check",
                       "response": serde_json::Value::Array(verdicts).to_string()}),
                json!({"instance_id": id, "task": "keyfact_alignment",
                       "response": common::alignment_reply()}),
            ]
        })
        .collect();
    let gold_rows: Vec<serde_json::Value> = ids
        .iter()
        .zip(&flags)
        .map(|(id, f)| {
            let labels: Vec<serde_json::Value> = f
                .iter()
                .enumerate()
                .map(|(i, &has_error)| json!({"index": i + 1, "has_error": has_error}))
                .collect();
            let keyfact_labels: Vec<serde_json::Value> = [true, true, true, false]
                .iter()
                .enumerate()
                .map(|(i, &matched)| {
                    json!({"index": i + 1, "matched": matched,
                           "line_numbers": if matched { json!([if i == 2 { 3 } else { 1 }]) } else { json!([]) }})
                })
                .collect();
            json!({"instance_id": id, "sentence_labels": labels, "keyfact_labels": keyfact_labels})
        })
        .collect();

    let env = MockEnv::new(&instances, &fixtures);
    let gold_path = env.dir.path().join("gold.jsonl");
    common::write_jsonl(&gold_path, &gold_rows);
    let results_path = env.dir.path().join("results.jsonl");

    let eval_out = sumeval(
        &[
            "eval",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--out",
            results_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(eval_out.status.success(), "stderr: {}", stderr(&eval_out));

    let bench_out = sumeval(
        &[
            "benchmark",
            "--pred",
            results_path.to_str().unwrap(),
            "--gold",
            gold_path.to_str().unwrap(),
            "--permutations",
            "200",
            "--format",
            "json",
        ],
        env.dir.path(),
    );
    assert!(bench_out.status.success(), "stderr: {}", stderr(&bench_out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&bench_out)).unwrap();

    // Predictions equal gold: bAcc and both correlations are 1.0.
    let value = |v: &serde_json::Value| v.as_f64().unwrap();
    // 5 gold positives, 7 gold negatives, all predicted correctly:
    // (5/5 + 7/7)/2 carried as 70/70 exactly.
    assert_eq!(
        report["sentence_level"]["balanced_accuracy"]["exact"],
        json!([70, 70])
    );
    assert!((value(&report["summary_level"]["faithfulness"]["pearson"]) - 1.0).abs() < 1e-12);
    assert!((value(&report["summary_level"]["faithfulness"]["spearman"]) - 1.0).abs() < 1e-12);
    assert!((value(&report["agreement"]["keyfact_cohen_kappa"]) - 1.0).abs() < 1e-12);
}

#[test]
fn benchmark_formats_agree_on_values_and_report_rerenders() {
    let env = MockEnv::new(
        &[
            common::worked_example_instance("a", "s1"),
            common::worked_example_instance("b", "s1"),
            common::worked_example_instance("c", "s2"),
        ],
        &["a", "b", "c"]
            .iter()
            .flat_map(|id| common::worked_example_fixtures(id))
            .collect::<Vec<_>>(),
    );
    let gold_rows: Vec<serde_json::Value> = ["a", "b", "c"]
        .iter()
        .map(|id| {
            json!({
                "instance_id": id,
                "sentence_labels": [
                    {"index": 1, "has_error": false},
                    {"index": 2, "has_error": true, "category": "entity error"},
                    {"index": 3, "has_error": true, "category": "out-of-context error"}
                ],
            })
        })
        .collect();
    let gold_path = env.dir.path().join("gold.jsonl");
    common::write_jsonl(&gold_path, &gold_rows);
    let results_path = env.dir.path().join("results.jsonl");

    sumeval(
        &[
            "eval",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--out",
            results_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );

    let json_path = env.dir.path().join("report.json");
    let out = sumeval(
        &[
            "benchmark",
            "--pred",
            results_path.to_str().unwrap(),
            "--gold",
            gold_path.to_str().unwrap(),
            "--levels",
            "sentence,localization",
            "--format",
            "json",
            "--out",
            json_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let bacc = report["sentence_level"]["balanced_accuracy"]["value"]
        .as_f64()
        .unwrap();

    // Re-render the saved JSON as CSV and Markdown; numbers must agree.
    for format in ["csv", "markdown"] {
        let rendered = sumeval(
            &[
                "report",
                "--input",
                json_path.to_str().unwrap(),
                "--format",
                format,
            ],
            env.dir.path(),
        );
        assert!(rendered.status.success());
        let text = stdout(&rendered);
        assert!(
            text.contains(&format!("{bacc:.4}")),
            "{format} rendering lost the bAcc value: {text}"
        );
    }
}

#[test]
fn extract_keyfacts_and_summarize_round_trip() {
    let instances = vec![json!({
        "instance_id": "a", "system_id": "s", "document": "d", "summary": "x.",
        "reference": "The plant opened. It employs forty people."
    })];
    let fixtures = vec![
        json!({"instance_id": "a", "task": "keyfact_extraction",
               "response": json!({"key facts": ["The plant opened.", "The plant employs forty people."]}).to_string()}),
        json!({"instance_id": "d1", "task": "summarize", "response": "A short summary."}),
    ];
    let env = MockEnv::new(&instances, &fixtures);
    let keyfacts_path = env.dir.path().join("keyfacts.jsonl");
    let out = sumeval(
        &[
            "extract-keyfacts",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--input",
            env.instances_path.to_str().unwrap(),
            "--out",
            keyfacts_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let row: serde_json::Value = serde_json::from_str(
        fs::read_to_string(&keyfacts_path)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(row["origin"], json!("machine"));
    assert_eq!(row["keyfacts"].as_array().unwrap().len(), 2);

    // Summarize two-liner: one doc with a fixture.
    let docs_path = env.dir.path().join("docs.jsonl");
    common::write_jsonl(
        &docs_path,
        &[json!({"doc_id": "d1", "text": "Document text."})],
    );
    let summaries_path = env.dir.path().join("summaries.jsonl");
    let out = sumeval(
        &[
            "summarize",
            "--backend",
            "mock",
            "--fixtures",
            env.fixtures_path.to_str().unwrap(),
            "--model",
            "mock-model",
            "--input",
            docs_path.to_str().unwrap(),
            "--out",
            summaries_path.to_str().unwrap(),
        ],
        env.dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let row: serde_json::Value = serde_json::from_str(
        fs::read_to_string(&summaries_path)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(row["system_id"], json!("mock-model"));
    assert_eq!(row["summary"], json!("A short summary."));
}

#[test]
fn rerun_with_identical_flags_is_byte_identical() {
    let env = MockEnv::new(
        &[common::worked_example_instance("fig", "sysA")],
        &common::worked_example_fixtures("fig"),
    );
    let run = |out: &str| {
        let out_path = env.dir.path().join(out);
        let output = sumeval(
            &[
                "eval",
                "--backend",
                "mock",
                "--fixtures",
                env.fixtures_path.to_str().unwrap(),
                "--input",
                env.instances_path.to_str().unwrap(),
                "--cache-dir",
                env.dir.path().join("cache").to_str().unwrap(),
                "--out",
                out_path.to_str().unwrap(),
            ],
            env.dir.path(),
        );
        (fs::read(&out_path).unwrap(), stdout(&output))
    };
    let (bytes1, summary1) = run("r1.jsonl");
    let (bytes2, summary2) = run("r2.jsonl");
    assert_eq!(bytes1, bytes2);
    assert_eq!(summary1, summary2);
}
