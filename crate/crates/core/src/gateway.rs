//! Chat-completion client with a record/replay response cache.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 4096;
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_base_ms: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub credential_env_var: String,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    pub concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o".to_string(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            credential_env_var: "OPENAI_API_KEY".to_string(),
            timeout_secs: 120,
            retry: RetryPolicy::default(),
            concurrency: DEFAULT_CONCURRENCY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRequest {
    pub prompt_text: String,
    pub request_id: String,
}

impl LlmRequest {
    pub fn new(prompt_text: impl Into<String>, cfg: &ProviderConfig) -> Self {
        let prompt_text = prompt_text.into();
        let request_id = request_id(&cfg.model_name, cfg.temperature, &prompt_text);
        LlmRequest { prompt_text, request_id }
    }
}

/// SHA-256 over length-prefixed `model`, `temperature`, `prompt`.
pub fn request_id(model: &str, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    for part in [model, &temperature.to_string(), prompt] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderMeta {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub raw_text: String,
    pub provider_meta: ProviderMeta,
    pub from_cache: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no cached response for request {0}")]
    CacheMiss(String),
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("cache file {path}: {message}")]
    Cache { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    Record,
    Replay,
    Passthrough,
}

impl std::str::FromStr for CacheMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            "passthrough" => Ok(CacheMode::Passthrough),
            other => Err(format!("unknown cache mode `{other}`")),
        }
    }
}

impl std::fmt::Display for CacheMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CacheMode::Record => "record",
            CacheMode::Replay => "replay",
            CacheMode::Passthrough => "passthrough",
        })
    }
}

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub request_id: String,
    pub model: String,
    pub temperature: f64,
    pub prompt_sha: String,
    pub response_text: String,
    pub timestamp: String,
}

/// Append-only response store. The first record for an id wins on lookup.
#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    mode: CacheMode,
    entries: Mutex<HashMap<String, CacheRecord>>,
}

impl ResponseCache {
    /// Opens (or prepares to create) a line-delimited cache file.
    pub fn open(path: impl AsRef<Path>, mode: CacheMode) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: CacheRecord = serde_json::from_str(line).map_err(|e| GatewayError::Cache {
                        path: path.display().to_string(),
                        message: format!("line {}: {e}", i + 1),
                    })?;
                    entries.entry(rec.request_id.clone()).or_insert(rec);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(GatewayError::Cache { path: path.display().to_string(), message: e.to_string() }),
        }
        Ok(ResponseCache { path: Some(path), mode, entries: Mutex::new(entries) })
    }

    /// A cache that never touches the filesystem.
    pub fn in_memory(mode: CacheMode) -> Self {
        ResponseCache { path: None, mode, entries: Mutex::new(HashMap::new()) }
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, request_id: &str) -> Option<CacheRecord> {
        self.entries.lock().unwrap().get(request_id).cloned()
    }

    /// Appends a record; existing records are never rewritten.
    pub fn append(&self, record: CacheRecord) -> Result<(), GatewayError> {
        let mut entries = self.entries.lock().unwrap();
        if let Some(path) = &self.path {
            let fail = |e: std::io::Error| GatewayError::Cache { path: path.display().to_string(), message: e.to_string() };
            let mut line = serde_json::to_string(&record).expect("records serialize");
            line.push('\n');
            let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(fail)?;
            file.write_all(line.as_bytes()).map_err(fail)?;
        }
        entries.entry(record.request_id.clone()).or_insert(record);
        Ok(())
    }
}

/// Wire-format seam between the gateway and a provider API.
pub trait ProviderAdapter: Send + Sync {
    fn request_body(&self, request: &LlmRequest, cfg: &ProviderConfig) -> Value;
    /// Completion text and metadata from a successful response body.
    fn parse_body(&self, body: &Value) -> Option<(String, ProviderMeta)>;
}

/// OpenAI-style chat completion: one user message, text from the first choice.
#[derive(Debug, Clone, Copy, Default)]
pub struct OpenAiChat;

impl ProviderAdapter for OpenAiChat {
    fn request_body(&self, request: &LlmRequest, cfg: &ProviderConfig) -> Value {
        json!({
            "model": cfg.model_name,
            "messages": [{"role": "user", "content": request.prompt_text}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_output_tokens,
        })
    }

    fn parse_body(&self, body: &Value) -> Option<(String, ProviderMeta)> {
        let text = body.pointer("/choices/0/message/content")?.as_str()?.to_string();
        let meta = ProviderMeta {
            model: body.get("model").and_then(Value::as_str).unwrap_or_default().to_string(),
            usage: body.get("usage").cloned(),
        };
        Some((text, meta))
    }
}

/// Counting semaphore bounding in-flight provider calls.
#[derive(Debug)]
struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

pub struct Gateway {
    cfg: ProviderConfig,
    adapter: Box<dyn ProviderAdapter>,
    agent: ureq::Agent,
    permits: Permits,
}

impl Gateway {
    pub fn new(cfg: ProviderConfig) -> Self {
        Self::with_adapter(cfg, Box::new(OpenAiChat))
    }

    pub fn with_adapter(cfg: ProviderConfig, adapter: Box<dyn ProviderAdapter>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = Permits { available: Mutex::new(cfg.concurrency.max(1)), freed: Condvar::new() };
        Gateway { cfg, adapter, agent, permits }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn request(&self, prompt_text: impl Into<String>) -> LlmRequest {
        LlmRequest::new(prompt_text, &self.cfg)
    }

    pub fn complete(&self, request: &LlmRequest, cache: &ResponseCache) -> Result<LlmResponse, GatewayError> {
        match cache.mode() {
            CacheMode::Replay => {
                let rec = cache.get(&request.request_id).ok_or_else(|| GatewayError::CacheMiss(request.request_id.clone()))?;
                Ok(LlmResponse {
                    raw_text: rec.response_text,
                    provider_meta: ProviderMeta { model: rec.model, usage: None },
                    from_cache: true,
                })
            }
            CacheMode::Record => {
                let response = self.call(request)?;
                cache.append(CacheRecord {
                    request_id: request.request_id.clone(),
                    model: self.cfg.model_name.clone(),
                    temperature: self.cfg.temperature,
                    prompt_sha: sha256_hex(&request.prompt_text),
                    response_text: response.raw_text.clone(),
                    timestamp: chrono::Utc::now().to_rfc3339(),
                })?;
                Ok(response)
            }
            CacheMode::Passthrough => self.call(request),
        }
    }

    fn call(&self, request: &LlmRequest) -> Result<LlmResponse, GatewayError> {
        let key = std::env::var(&self.cfg.credential_env_var)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| GatewayError::AuthError(format!("environment variable {} is not set", self.cfg.credential_env_var)))?;
        let body = self.adapter.request_body(request, &self.cfg).to_string();
        let _permit = self.permits.acquire();
        let attempts = self.cfg.retry.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.cfg.retry.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            let sent = self
                .agent
                .post(&self.cfg.endpoint_url)
                .header("Authorization", &format!("Bearer {key}"))
                .header("Content-Type", "application/json")
                .send(body.as_str());
            let mut response = match sent {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = match response.body_mut().read_to_string() {
                Ok(t) => t,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            return match status {
                200..=299 => {
                    let parsed: Value =
                        serde_json::from_str(&text).map_err(|_| GatewayError::ProviderError { status, body: text.clone() })?;
                    let (raw_text, provider_meta) = self
                        .adapter
                        .parse_body(&parsed)
                        .ok_or_else(|| GatewayError::ProviderError { status, body: text.clone() })?;
                    Ok(LlmResponse { raw_text, provider_meta, from_cache: false })
                }
                401 | 403 => Err(GatewayError::AuthError(format!("provider returned status {status}"))),
                _ => Err(GatewayError::ProviderError { status, body: text }),
            };
        }
        Err(GatewayError::TransportError { attempts, message: last_error })
    }
}

/// One-shot completion through a fresh [`Gateway`].
pub fn complete(request: &LlmRequest, cfg: &ProviderConfig, cache: &ResponseCache) -> Result<LlmResponse, GatewayError> {
    Gateway::new(cfg.clone()).complete(request, cache)
}
