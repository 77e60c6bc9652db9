//! Analyzer backends: the regex baseline, a scripted fixture replayer and a
//! remote completion client.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::decode::decode_model_response;
use super::prompt::build_prompt;
use super::regex_engine::regex_parse;
use super::sanitize_hint;
use crate::error::{BackendError, SchemaError};
use crate::intent::{IntentRegistry, ParsedHint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Regex,
    Llm,
    Scripted,
    Cache,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Regex => "regex",
            Source::Llm => "llm",
            Source::Scripted => "scripted",
            Source::Cache => "cache",
        }
    }
}

pub trait AnalyzerBackend: Send + Sync {
    fn source(&self) -> Source;

    /// Parses an already sanitized hint.
    fn parse(&self, sanitized_hint: &str) -> Result<ParsedHint, BackendError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RegexBackend;

impl AnalyzerBackend for RegexBackend {
    fn source(&self) -> Source {
        Source::Regex
    }

    fn parse(&self, sanitized_hint: &str) -> Result<ParsedHint, BackendError> {
        Ok(regex_parse(sanitized_hint))
    }
}

/// One `{hint, parsed}` fixture record; `parsed` is the wire object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptedRecord {
    pub hint: String,
    pub parsed: Value,
}

/// Replays pre-recorded parses keyed by sanitized hint text.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    fixtures: HashMap<String, ParsedHint>,
}

impl ScriptedBackend {
    pub fn from_records(records: &[ScriptedRecord], max_hint_length: usize) -> Result<Self, SchemaError> {
        let mut fixtures = HashMap::with_capacity(records.len());
        for r in records {
            let key = sanitize_hint(&r.hint, max_hint_length);
            let parsed = ParsedHint::from_wire(key.clone(), &r.parsed)?;
            fixtures.insert(key, parsed);
        }
        Ok(ScriptedBackend { fixtures })
    }

    pub fn from_json(text: &str, max_hint_length: usize) -> Result<Self, BackendError> {
        let records: Vec<ScriptedRecord> = serde_json::from_str(text)
            .map_err(|e| BackendError::Unavailable(format!("scripted fixture: {e}")))?;
        Self::from_records(&records, max_hint_length).map_err(|e| BackendError::Unavailable(format!("scripted fixture: {e}")))
    }

    pub fn load(path: &Path, max_hint_length: usize) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, max_hint_length)
    }

    pub fn insert(&mut self, hint: &str, parsed: ParsedHint) {
        self.fixtures.insert(hint.to_string(), parsed);
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl AnalyzerBackend for ScriptedBackend {
    fn source(&self) -> Source {
        Source::Scripted
    }

    fn parse(&self, sanitized_hint: &str) -> Result<ParsedHint, BackendError> {
        self.fixtures
            .get(sanitized_hint)
            .cloned()
            .ok_or_else(|| BackendError::NoFixture(sanitized_hint.to_string()))
    }
}

/// Request/response shape of the remote completion endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// `{model, prompt, temperature, top_p, max_tokens}` → `{completion}`.
    #[default]
    Simple,
    /// Chat-completions style: `choices[0].message.content`.
    OpenAi,
    /// Bedrock Converse: `POST {endpoint}/model/{model}/converse`.
    Bedrock,
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(Dialect::Simple),
            "openai" => Ok(Dialect::OpenAi),
            "bedrock" => Ok(Dialect::Bedrock),
            other => Err(format!("unknown dialect `{other}` (expected simple, openai or bedrock)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub endpoint: String,
    pub model_id: String,
    pub dialect: Dialect,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    #[serde(with = "millis")]
    pub request_timeout: Duration,
    pub max_hint_length: usize,
    /// Sent as a bearer token when set.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            endpoint: "http://127.0.0.1:8081/v1/complete".to_string(),
            model_id: "amazon.nova-pro-v1:0".to_string(),
            dialect: Dialect::Simple,
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 512,
            request_timeout: Duration::from_secs(10),
            max_hint_length: 2048,
            api_key: None,
        }
    }
}

impl AnalyzerConfig {
    /// Defaults overridden by `HINTSCHED_LLM_ENDPOINT`, `HINTSCHED_LLM_MODEL`,
    /// `HINTSCHED_LLM_DIALECT`, `HINTSCHED_LLM_TIMEOUT_MS` and
    /// `HINTSCHED_LLM_API_KEY`.
    pub fn from_env() -> Self {
        let mut c = AnalyzerConfig::default();
        if let Ok(v) = std::env::var("HINTSCHED_LLM_ENDPOINT") {
            c.endpoint = v;
        }
        if let Ok(v) = std::env::var("HINTSCHED_LLM_MODEL") {
            c.model_id = v;
        }
        if let Some(d) = std::env::var("HINTSCHED_LLM_DIALECT").ok().and_then(|v| v.parse().ok()) {
            c.dialect = d;
        }
        if let Some(ms) = std::env::var("HINTSCHED_LLM_TIMEOUT_MS").ok().and_then(|v| v.parse().ok()) {
            c.request_timeout = Duration::from_millis(ms);
        }
        c.api_key = std::env::var("HINTSCHED_LLM_API_KEY").ok().filter(|k| !k.is_empty());
        c
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Remote model client. Blocking; call from a worker thread, not an async task.
#[derive(Debug)]
pub struct LlmBackend {
    config: AnalyzerConfig,
    client: reqwest::blocking::Client,
}

impl LlmBackend {
    pub fn new(config: AnalyzerConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .connect_timeout(config.request_timeout)
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(LlmBackend { config, client })
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    fn request(&self, prompt: &str) -> (String, Value) {
        let c = &self.config;
        match c.dialect {
            Dialect::Simple => (
                c.endpoint.clone(),
                json!({
                    "model": c.model_id,
                    "prompt": prompt,
                    "temperature": c.temperature,
                    "top_p": c.top_p,
                    "max_tokens": c.max_tokens,
                }),
            ),
            Dialect::OpenAi => (
                c.endpoint.clone(),
                json!({
                    "model": c.model_id,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": c.temperature,
                    "top_p": c.top_p,
                    "max_tokens": c.max_tokens,
                }),
            ),
            Dialect::Bedrock => (
                format!("{}/model/{}/converse", c.endpoint.trim_end_matches('/'), c.model_id),
                json!({
                    "messages": [{"role": "user", "content": [{"text": prompt}]}],
                    "inferenceConfig": {
                        "temperature": c.temperature,
                        "topP": c.top_p,
                        "maxTokens": c.max_tokens,
                    },
                }),
            ),
        }
    }

    fn completion_text(&self, body: &Value) -> Option<String> {
        let text = match self.config.dialect {
            Dialect::Simple => body.get("completion"),
            Dialect::OpenAi => body.pointer("/choices/0/message/content"),
            Dialect::Bedrock => body.pointer("/output/message/content/0/text"),
        };
        text.and_then(Value::as_str).map(str::to_string)
    }
}

impl AnalyzerBackend for LlmBackend {
    fn source(&self) -> Source {
        Source::Llm
    }

    fn parse(&self, sanitized_hint: &str) -> Result<ParsedHint, BackendError> {
        let prompt = build_prompt(&IntentRegistry, sanitized_hint);
        let (url, body) = self.request(&prompt);
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::Unavailable(format!("{url} returned {status}")));
        }
        let body: Value = resp.json().map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let text = self
            .completion_text(&body)
            .ok_or_else(|| BackendError::Unavailable("response carries no completion text".into()))?;
        Ok(decode_model_response(sanitized_hint, &text)?.parsed)
    }
}
