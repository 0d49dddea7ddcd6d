//! Prompt dispatch to a pluggable completion backend.
//!
//! One single-turn user message per request, temperature 0 by default, no
//! conversation state carried between instances. Transport failures retry
//! with exponential backoff; HTTP 4xx is terminal. Successful responses are
//! cached on disk keyed by prompt text, model name, and temperature, so
//! interrupted runs resume without re-spending.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::{RenderedPrompt, Task};

/// Name of the environment variable holding the API key for the HTTP
/// backend. Never passed as a flag and never echoed.
pub const API_KEY_ENV: &str = "SUMEVAL_API_KEY";

const BACKOFF_BASE: Duration = Duration::from_millis(200);

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    OpenAiCompatibleHttp,
    MockReplay,
}

/// Backend configuration. The default profile keeps temperature at 0.0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL for the HTTP backend, e.g. `https://api.openai.com/v1`.
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub parallelism: usize,
    pub cache_dir: Option<PathBuf>,
    /// Fixture file for the mock replay backend.
    pub fixtures_path: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::MockReplay,
            endpoint_url: String::new(),
            model_name: "mock".to_string(),
            temperature: 0.0,
            max_output_tokens: 4096,
            request_timeout: Duration::from_secs(120),
            max_retries: 2,
            parallelism: 4,
            cache_dir: None,
            fixtures_path: None,
        }
    }
}

/// One prompt to complete, tagged with the instance and task it belongs to.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub instance_id: String,
    pub task: Task,
    pub prompt: RenderedPrompt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportStatus {
    Ok,
    /// Terminal failure after retries (or a non-retryable response).
    TransportError(String),
}

impl TransportStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, TransportStatus::Ok)
    }
}

/// The raw reply for one request. `raw_text` is byte-exact as received.
#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub instance_id: String,
    pub task: Task,
    pub raw_text: String,
    pub transport_status: TransportStatus,
    pub latency: Duration,
    pub from_cache: bool,
}

/// Mock fixture row: a canned response keyed by prompt hash and/or by
/// (instance_id, task).
#[derive(Debug, Deserialize)]
struct FixtureRow {
    response: String,
    #[serde(default)]
    prompt_sha256: Option<String>,
    #[serde(default)]
    instance_id: Option<String>,
    #[serde(default)]
    task: Option<Task>,
}

#[derive(Debug, Default)]
struct FixtureStore {
    by_hash: HashMap<String, String>,
    by_instance_task: HashMap<(String, Task), String>,
}

impl FixtureStore {
    fn load(path: &Path) -> Result<Self, GatewayError> {
        let file = fs::File::open(path).map_err(|e| GatewayError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut store = FixtureStore::default();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| GatewayError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let row: FixtureRow = serde_json::from_str(&line).map_err(|e| {
                GatewayError::Config(format!(
                    "bad fixture row at {}:{}: {e}",
                    path.display(),
                    idx + 1
                ))
            })?;
            let keyed = row.prompt_sha256.is_some() || row.instance_id.is_some();
            if !keyed {
                return Err(GatewayError::Config(format!(
                    "fixture row at {}:{} needs prompt_sha256 or instance_id",
                    path.display(),
                    idx + 1
                )));
            }
            if let Some(hash) = row.prompt_sha256 {
                store.by_hash.insert(hash, row.response.clone());
            }
            if let (Some(id), Some(task)) = (row.instance_id, row.task) {
                store.by_instance_task.insert((id, task), row.response);
            }
        }
        Ok(store)
    }

    fn lookup(&self, prompt_hash: &str, instance_id: &str, task: Task) -> Option<&String> {
        self.by_hash.get(prompt_hash).or_else(|| {
            self.by_instance_task
                .get(&(instance_id.to_string(), task))
        })
    }
}

/// Hex SHA-256 of the prompt/model/temperature triple; the cache and fixture
/// key. The endpoint is deliberately not part of the key.
pub fn cache_key(prompt_text: &str, model_name: &str, temperature: f64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt_text.as_bytes());
    hasher.update([0u8]);
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(format!("{temperature:?}").as_bytes());
    hex::encode(hasher.finalize())
}

/// Hex SHA-256 of the prompt text alone; the mock fixture key.
pub fn prompt_hash(prompt_text: &str) -> String {
    hex::encode(Sha256::digest(prompt_text.as_bytes()))
}

#[derive(Serialize)]
struct CacheSidecar<'a> {
    model: &'a str,
    timestamp: u64,
}

/// A shareable completion gateway over one configured backend.
pub struct Gateway {
    config: BackendConfig,
    fixtures: Option<FixtureStore>,
    client: OnceLock<reqwest::blocking::Client>,
    api_key: Option<String>,
}

// The API key never appears in debug output.
impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish_non_exhaustive()
    }
}

impl Gateway {
    /// Validates the configuration up front: endpoint shape, API key
    /// presence, fixture file, parallelism bounds.
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        if config.parallelism < 1 {
            return Err(GatewayError::Config("parallelism must be >= 1".into()));
        }
        let mut api_key = None;
        let mut fixtures = None;
        match config.kind {
            BackendKind::OpenAiCompatibleHttp => {
                let url = config.endpoint_url.trim();
                if url.is_empty() {
                    return Err(GatewayError::Config(
                        "the openai backend requires --endpoint".into(),
                    ));
                }
                if reqwest::Url::parse(url).is_err() {
                    return Err(GatewayError::Config(format!(
                        "malformed endpoint url {url:?}"
                    )));
                }
                match std::env::var(API_KEY_ENV) {
                    Ok(key) if !key.is_empty() => api_key = Some(key),
                    _ => {
                        return Err(GatewayError::Config(format!(
                            "the openai backend requires the {API_KEY_ENV} environment variable"
                        )));
                    }
                }
            }
            BackendKind::MockReplay => {
                let Some(path) = &config.fixtures_path else {
                    return Err(GatewayError::Config(
                        "the mock backend requires --fixtures".into(),
                    ));
                };
                fixtures = Some(FixtureStore::load(path)?);
            }
        }
        if let Some(dir) = &config.cache_dir {
            fs::create_dir_all(dir).map_err(|e| GatewayError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
        Ok(Self {
            config,
            fixtures,
            client: OnceLock::new(),
            api_key,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.config.cache_dir.as_ref().map(|d| d.join(key))
    }

    fn cache_read(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.cache_path(key)?).ok()
    }

    /// Atomic write-then-rename so concurrent writers never expose a torn
    /// cache entry.
    fn cache_write(&self, key: &str, raw_text: &str) {
        let Some(path) = self.cache_path(key) else {
            return;
        };
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        if fs::write(&tmp, raw_text).is_ok() {
            let _ = fs::rename(&tmp, &path);
            let sidecar = CacheSidecar {
                model: &self.config.model_name,
                timestamp: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            };
            let _ = fs::write(
                path.with_extension("json"),
                serde_json::to_vec(&sidecar).unwrap_or_default(),
            );
        }
    }

    /// Completes one prompt. Transport failures are reported in-band through
    /// `transport_status`; `Err` is reserved for configuration problems.
    pub fn complete(&self, request: &CompletionRequest) -> CompletionResult {
        let start = Instant::now();
        let key = cache_key(
            &request.prompt.text,
            &self.config.model_name,
            self.config.temperature,
        );
        if let Some(cached) = self.cache_read(&key) {
            return CompletionResult {
                instance_id: request.instance_id.clone(),
                task: request.task,
                raw_text: cached,
                transport_status: TransportStatus::Ok,
                latency: start.elapsed(),
                from_cache: true,
            };
        }

        let outcome = match self.config.kind {
            BackendKind::MockReplay => self.complete_mock(request),
            BackendKind::OpenAiCompatibleHttp => self.complete_http(request),
        };
        let (raw_text, transport_status) = match outcome {
            Ok(text) => {
                self.cache_write(&key, &text);
                (text, TransportStatus::Ok)
            }
            Err(detail) => (String::new(), TransportStatus::TransportError(detail)),
        };
        CompletionResult {
            instance_id: request.instance_id.clone(),
            task: request.task,
            raw_text,
            transport_status,
            latency: start.elapsed(),
            from_cache: false,
        }
    }

    fn complete_mock(&self, request: &CompletionRequest) -> Result<String, String> {
        let store = self.fixtures.as_ref().expect("mock backend has fixtures");
        let hash = prompt_hash(&request.prompt.text);
        store
            .lookup(&hash, &request.instance_id, request.task)
            .cloned()
            .ok_or_else(|| {
                format!(
                    "no fixture for instance {:?} task {} (prompt {})",
                    request.instance_id,
                    request.task,
                    &hash[..12]
                )
            })
    }

    fn http_client(&self) -> &reqwest::blocking::Client {
        self.client.get_or_init(|| {
            reqwest::blocking::Client::builder()
                .timeout(self.config.request_timeout)
                .build()
                .expect("http client builds")
        })
    }

    fn completions_url(&self) -> String {
        let base = self.config.endpoint_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    /// Sends the chat-completions request, retrying transport-level failures
    /// (connect errors, timeouts, 5xx) with exponential backoff. 4xx is
    /// terminal and never retried.
    fn complete_http(&self, request: &CompletionRequest) -> Result<String, String> {
        let url = self.completions_url();
        let body = serde_json::json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": request.prompt.text}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        let api_key = self.api_key.as_deref().unwrap_or_default();

        let attempts = self.config.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
            let response = self
                .http_client()
                .post(&url)
                .bearer_auth(api_key)
                .json(&body)
                .send();
            match response {
                Err(e) => {
                    last_error = format!("attempt {}: {e}", attempt + 1);
                }
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let text = resp.text().map_err(|e| format!("body read: {e}"))?;
                        return extract_message_content(&text);
                    }
                    let body = resp.text().unwrap_or_default();
                    if status.is_client_error() {
                        return Err(format!("http {status} (terminal): {body}"));
                    }
                    last_error = format!("attempt {}: http {status}: {body}", attempt + 1);
                }
            }
        }
        Err(format!(
            "transport failed after {attempts} attempts: {last_error}"
        ))
    }

    /// Completes a batch with at most `parallelism` requests in flight.
    /// Results come back in input order regardless of completion order, and
    /// one request's failure never aborts the batch.
    pub fn complete_batch(&self, requests: &[CompletionRequest]) -> Vec<CompletionResult> {
        if requests.is_empty() {
            return Vec::new();
        }
        let workers = self.config.parallelism.min(requests.len());
        if workers <= 1 {
            return requests.iter().map(|r| self.complete(r)).collect();
        }

        let slots: Vec<OnceLock<CompletionResult>> =
            (0..requests.len()).map(|_| OnceLock::new()).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        break;
                    }
                    let result = self.complete(&requests[i]);
                    let _ = slots[i].set(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().expect("worker filled every slot"))
            .collect()
    }
}

#[derive(Deserialize)]
struct ChatCompletionsResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

fn extract_message_content(body: &str) -> Result<String, String> {
    let parsed: ChatCompletionsResponse =
        serde_json::from_str(body).map_err(|e| format!("unexpected response shape: {e}"))?;
    parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| "response has no choices".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{render_summarize, ExpectedSchema};
    use std::io::Write;

    fn prompt(text: &str) -> RenderedPrompt {
        RenderedPrompt {
            text: text.to_string(),
            expected_schema: ExpectedSchema::PlainSummary,
            expected_count: 0,
            template_key: "test".into(),
            template_version: "test".into(),
        }
    }

    fn request(id: &str, text: &str) -> CompletionRequest {
        CompletionRequest {
            instance_id: id.to_string(),
            task: Task::Summarize,
            prompt: prompt(text),
        }
    }

    fn mock_gateway(rows: &[serde_json::Value]) -> (Gateway, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = dir.path().join("fixtures.jsonl");
        let mut f = fs::File::create(&fixtures).unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        let gateway = Gateway::new(BackendConfig {
            fixtures_path: Some(fixtures),
            ..BackendConfig::default()
        })
        .unwrap();
        (gateway, dir)
    }

    #[test]
    fn mock_replay_returns_fixture_by_prompt_hash() {
        let text = render_summarize("A document.").unwrap().text;
        let (gateway, _dir) = mock_gateway(&[serde_json::json!({
            "prompt_sha256": prompt_hash(&text),
            "response": "The canned summary."
        })]);
        let result = gateway.complete(&CompletionRequest {
            instance_id: "x".into(),
            task: Task::Summarize,
            prompt: render_summarize("A document.").unwrap(),
        });
        assert!(result.transport_status.is_ok());
        assert_eq!(result.raw_text, "The canned summary.");
        assert!(!result.from_cache);
    }

    #[test]
    fn mock_replay_falls_back_to_instance_task_key() {
        let (gateway, _dir) = mock_gateway(&[serde_json::json!({
            "instance_id": "inst-1",
            "task": "summarize",
            "response": "keyed by instance"
        })]);
        let result = gateway.complete(&request("inst-1", "anything"));
        assert_eq!(result.raw_text, "keyed by instance");
        let miss = gateway.complete(&request("inst-2", "anything"));
        assert!(matches!(
            miss.transport_status,
            TransportStatus::TransportError(_)
        ));
        assert!(miss.raw_text.is_empty());
    }

    #[test]
    fn cache_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let fixtures = dir.path().join("fixtures.jsonl");
        let payload = "exact\nbytes\t with \u{00e9}verything ";
        fs::write(
            &fixtures,
            serde_json::json!({
                "instance_id": "a",
                "task": "summarize",
                "response": payload
            })
            .to_string(),
        )
        .unwrap();
        let gateway = Gateway::new(BackendConfig {
            fixtures_path: Some(fixtures),
            cache_dir: Some(dir.path().join("cache")),
            ..BackendConfig::default()
        })
        .unwrap();

        let first = gateway.complete(&request("a", "p"));
        assert!(!first.from_cache);
        let second = gateway.complete(&request("a", "p"));
        assert!(second.from_cache);
        assert_eq!(second.raw_text, payload);
        assert_eq!(first.raw_text, second.raw_text);
    }

    #[test]
    fn batch_preserves_input_order_at_any_parallelism() {
        let rows: Vec<serde_json::Value> = (0..10)
            .map(|i| {
                serde_json::json!({
                    "instance_id": format!("i{i}"),
                    "task": "summarize",
                    "response": format!("reply {i}")
                })
            })
            .collect();
        for parallelism in [1, 3, 10] {
            let (mut gateway, _dir) = mock_gateway(&rows);
            gateway.config.parallelism = parallelism;
            let requests: Vec<CompletionRequest> =
                (0..10).map(|i| request(&format!("i{i}"), "p")).collect();
            let results = gateway.complete_batch(&requests);
            assert_eq!(results.len(), 10);
            for (i, r) in results.iter().enumerate() {
                assert_eq!(r.instance_id, format!("i{i}"));
                assert_eq!(r.raw_text, format!("reply {i}"));
            }
        }
    }

    #[test]
    fn one_failure_does_not_abort_the_batch() {
        let rows: Vec<serde_json::Value> = (0..9)
            .map(|i| {
                serde_json::json!({
                    "instance_id": format!("ok{i}"),
                    "task": "summarize",
                    "response": "fine"
                })
            })
            .collect();
        let (gateway, _dir) = mock_gateway(&rows);
        let mut requests: Vec<CompletionRequest> =
            (0..9).map(|i| request(&format!("ok{i}"), "p")).collect();
        requests.insert(4, request("missing", "p"));
        let results = gateway.complete_batch(&requests);
        assert_eq!(results.len(), 10);
        let failures: Vec<usize> = results
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.transport_status.is_ok())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(failures, vec![4]);
    }

    #[test]
    fn batch_equals_singles_under_serial_execution() {
        let rows: Vec<serde_json::Value> = (0..4)
            .map(|i| {
                serde_json::json!({
                    "instance_id": format!("i{i}"),
                    "task": "summarize",
                    "response": format!("r{i}")
                })
            })
            .collect();
        let (mut gateway, _dir) = mock_gateway(&rows);
        gateway.config.parallelism = 1;
        let requests: Vec<CompletionRequest> =
            (0..4).map(|i| request(&format!("i{i}"), "p")).collect();
        let batch = gateway.complete_batch(&requests);
        let singles: Vec<CompletionResult> =
            requests.iter().map(|r| gateway.complete(r)).collect();
        for (b, s) in batch.iter().zip(&singles) {
            assert_eq!(b.raw_text, s.raw_text);
            assert_eq!(b.instance_id, s.instance_id);
        }
    }

    #[test]
    fn missing_api_key_is_a_config_error_naming_the_variable() {
        std::env::remove_var(API_KEY_ENV);
        let err = Gateway::new(BackendConfig {
            kind: BackendKind::OpenAiCompatibleHttp,
            endpoint_url: "http://localhost:1/v1".into(),
            ..BackendConfig::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains(API_KEY_ENV));
    }

    #[test]
    fn malformed_endpoint_is_a_config_error() {
        // URL validation runs before the API-key check, so no env var needed.
        let err = Gateway::new(BackendConfig {
            kind: BackendKind::OpenAiCompatibleHttp,
            endpoint_url: "not a url".into(),
            ..BackendConfig::default()
        })
        .unwrap_err();
        assert!(matches!(err, GatewayError::Config(_)));
    }

    #[test]
    fn parses_first_choice_message_content() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;
        assert_eq!(extract_message_content(body).unwrap(), "hello");
        assert!(extract_message_content(r#"{"choices":[]}"#).is_err());
        assert!(extract_message_content("nonsense").is_err());
    }
}
