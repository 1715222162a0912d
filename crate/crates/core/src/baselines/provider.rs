use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ctcw::{ctcw_parse, ProbabilityTable};
use super::{BaselineError, Result};

/// Sampling temperature sent by [`HttpProvider`].
pub const CHAT_TEMPERATURE: f64 = 0.9;

/// Source of contrastive-word probabilities for a prompt.
pub trait CtcwProvider: Send + Sync {
    fn name(&self) -> &str;
    fn probabilities(&self, prompt: &str) -> Result<ProbabilityTable>;
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// One line of a mock fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRecord {
    pub prompt_sha256: String,
    pub after: f64,
    pub before: f64,
    pub therefore: f64,
    pub because: f64,
}

/// Offline provider: fixture tables looked up by prompt hash, and a
/// table derived from the hash itself for any other prompt.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    fixtures: HashMap<String, ProbabilityTable>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fixtures(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_fixture_str(&fs::read_to_string(path)?)
    }

    pub fn from_fixture_str(text: &str) -> Result<Self> {
        let mut provider = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fail = |message: String| BaselineError::Fixture { line: i + 1, message };
            let rec: FixtureRecord = serde_json::from_str(line).map_err(|e| fail(e.to_string()))?;
            if rec.prompt_sha256.len() != 64 || !rec.prompt_sha256.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(fail(format!("bad prompt_sha256 {:?}", rec.prompt_sha256)));
            }
            let table = ProbabilityTable::new(rec.after, rec.before, rec.therefore, rec.because)
                .map_err(|e| fail(e.to_string()))?;
            if provider
                .fixtures
                .insert(rec.prompt_sha256.to_ascii_lowercase(), table)
                .is_some()
            {
                return Err(fail(format!("duplicate fixture {}", rec.prompt_sha256)));
            }
        }
        Ok(provider)
    }

    pub fn insert(&mut self, prompt: &str, table: ProbabilityTable) {
        self.fixtures.insert(prompt_sha256(prompt), table);
    }

    pub fn has_fixture(&self, prompt: &str) -> bool {
        self.fixtures.contains_key(&prompt_sha256(prompt))
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl CtcwProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn probabilities(&self, prompt: &str) -> Result<ProbabilityTable> {
        let digest = Sha256::digest(prompt.as_bytes());
        if let Some(table) = self.fixtures.get(&hex::encode(digest)) {
            return Ok(*table);
        }
        // Two-decimal values in [0, 0.25], so the sum never exceeds 1.
        let p = |k: usize| f64::from(digest[k] % 26) / 100.0;
        ProbabilityTable::new(p(0), p(1), p(2), p(3))
    }
}

/// Chat-completion client configured from `CTCW_API_URL` and
/// `CTCW_API_KEY`. Requests are serialized per instance; request and
/// response bodies are logged verbatim at info level.
pub struct HttpProvider {
    url: String,
    key: Option<String>,
    model: String,
    client: Mutex<reqwest::blocking::Client>,
}

impl HttpProvider {
    pub const DEFAULT_MODEL: &'static str = "gpt-3.5-turbo";

    pub fn from_env(model: Option<&str>) -> Result<Self> {
        let url = std::env::var("CTCW_API_URL")
            .map_err(|_| BaselineError::Provider("CTCW_API_URL is not set".into()))?;
        Ok(Self::new(
            url,
            std::env::var("CTCW_API_KEY").ok(),
            model.unwrap_or(Self::DEFAULT_MODEL),
        ))
    }

    pub fn new(url: impl Into<String>, key: Option<String>, model: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            key,
            model: model.into(),
            client: Mutex::new(reqwest::blocking::Client::new()),
        }
    }

    pub fn request_body(&self, prompt: &str) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "temperature": CHAT_TEMPERATURE,
            "messages": [{"role": "user", "content": prompt}],
        })
    }

    fn complete(&self, prompt: &str) -> Result<String> {
        let body = self.request_body(prompt);
        log::info!("ctcw request: {body}");
        let client = self.client.lock().unwrap_or_else(|p| p.into_inner());
        let mut req = client.post(&self.url).json(&body);
        if let Some(key) = &self.key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BaselineError::Provider(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BaselineError::Provider(e.to_string()))?;
        log::info!("ctcw response ({status}): {text}");
        if !status.is_success() {
            return Err(BaselineError::Provider(format!("HTTP {status}")));
        }
        let value: serde_json::Value = serde_json::from_str(&text)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BaselineError::Provider("response has no choices[0].message.content".into()))
    }
}

impl CtcwProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn probabilities(&self, prompt: &str) -> Result<ProbabilityTable> {
        ctcw_parse(&self.complete(prompt)?)
    }
}
