//! Shared fixture builders for integration tests: a small worked example
//! plus helpers that write instance and mock-fixture files.

#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sumeval::gateway::{BackendConfig, Gateway};

pub const DOCUMENT: &str = "The city council approved the new harbor bridge on Monday after a final vote. Construction is planned to start in March and will take about two years. Mayor Ellen Park called the project a milestone for the region. Funding comes from a mix of state grants and local bonds.";

pub const SENTENCES: [&str; 3] = [
    "The council approved the harbor bridge on Monday.",
    "Construction will take five years.",
    "The bridge will include a rail line.",
];

pub const KEYFACTS: [&str; 4] = [
    "The council approved the bridge.",
    "The approval happened on Monday.",
    "A rail line is part of the plan.",
    "Funding includes local bonds.",
];

/// Fact-check reply: exactly one of the three sentences is factual.
pub fn fact_check_reply() -> String {
    json!([
        {"sentence": SENTENCES[0], "reason": "matches the article", "category": "no error"},
        {"sentence": SENTENCES[1], "reason": "the duration is wrong", "category": "entity error"},
        {"sentence": SENTENCES[2], "reason": "not in the article", "category": "out-of-context error"}
    ])
    .to_string()
}

/// Alignment reply: three of four keyfacts match, over sentences {1, 3}.
pub fn alignment_reply() -> String {
    json!([
        {"key fact": KEYFACTS[0], "response": "Yes", "line numbers": [1]},
        {"key fact": KEYFACTS[1], "response": "Yes", "line numbers": [1]},
        {"key fact": KEYFACTS[2], "response": "Yes", "line numbers": [3]},
        {"key fact": KEYFACTS[3], "response": "No", "line numbers": []}
    ])
    .to_string()
}

pub fn worked_example_instance(id: &str, system: &str) -> serde_json::Value {
    json!({
        "instance_id": id,
        "system_id": system,
        "document": DOCUMENT,
        "summary_sentences": SENTENCES,
        "keyfacts": KEYFACTS,
    })
}

pub fn worked_example_fixtures(id: &str) -> Vec<serde_json::Value> {
    vec![
        json!({"instance_id": id, "task": "fact_check", "response": fact_check_reply()}),
        json!({"instance_id": id, "task": "keyfact_alignment", "response": alignment_reply()}),
    ]
}

pub fn write_jsonl(path: &Path, rows: &[serde_json::Value]) {
    let mut file = fs::File::create(path).unwrap();
    for row in rows {
        writeln!(file, "{row}").unwrap();
    }
}

pub struct MockEnv {
    pub dir: tempfile::TempDir,
    pub instances_path: PathBuf,
    pub fixtures_path: PathBuf,
}

impl MockEnv {
    pub fn new(instances: &[serde_json::Value], fixtures: &[serde_json::Value]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let instances_path = dir.path().join("instances.jsonl");
        let fixtures_path = dir.path().join("fixtures.jsonl");
        write_jsonl(&instances_path, instances);
        write_jsonl(&fixtures_path, fixtures);
        Self {
            dir,
            instances_path,
            fixtures_path,
        }
    }

    pub fn gateway(&self) -> Gateway {
        Gateway::new(BackendConfig {
            fixtures_path: Some(self.fixtures_path.clone()),
            ..BackendConfig::default()
        })
        .unwrap()
    }

    pub fn gateway_with_cache(&self, cache_subdir: &str) -> Gateway {
        Gateway::new(BackendConfig {
            fixtures_path: Some(self.fixtures_path.clone()),
            cache_dir: Some(self.dir.path().join(cache_subdir)),
            ..BackendConfig::default()
        })
        .unwrap()
    }
}
