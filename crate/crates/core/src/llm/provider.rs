//! Plan providers: a scripted one for tests and replays, and a live HTTP
//! one for an OpenAI-compatible chat-completions endpoint.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::context::ContextBundle;
use super::{LlmConfig, LlmError};
use crate::guidance::RuleId;
use crate::transform::CATALOG;

pub const API_KEY_VAR: &str = "WORKBENCH_LLM_API_KEY";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Intent {
    Suggest { rule: RuleId },
    Chat { text: String },
}

impl Intent {
    /// Lookup key: `suggest:<rule>` or `chat:<normalized text>`.
    pub fn key(&self) -> String {
        match self {
            Intent::Suggest { rule } => format!("suggest:{rule}"),
            Intent::Chat { text } => format!("chat:{}", normalize_chat(text)),
        }
    }

    pub fn trigger_id(&self) -> String {
        match self {
            Intent::Suggest { rule } => rule.to_string(),
            Intent::Chat { .. } => "chat".into(),
        }
    }
}

pub fn normalize_chat(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanRequest {
    pub intent: Intent,
    pub fingerprint: String,
    pub bundle: ContextBundle,
}

pub trait PlanProvider {
    fn name(&self) -> &str;
    /// Raw reply text for a request.
    fn complete(&mut self, req: &PlanRequest) -> Result<String, LlmError>;
}

/// One scripted reply source. Without a fingerprint the entry matches any
/// workspace schema for its intent. `replies` are served in order across
/// repeated requests, the last one repeating.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Fixture {
    pub intent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replies: Vec<String>,
    /// Shorthand for a reply of `prose` plus one fenced plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub prose: String,
}

impl Fixture {
    pub fn with_plan(intent: impl Into<String>, prose: impl Into<String>, steps: Vec<Value>) -> Self {
        Self { intent: intent.into(), fingerprint: None, replies: Vec::new(), plan: Some(steps), prose: prose.into() }
    }

    fn reply(&self, n: usize) -> String {
        if let Some(r) = self.replies.get(n.min(self.replies.len().saturating_sub(1))) {
            return r.clone();
        }
        match &self.plan {
            Some(steps) => {
                let block = serde_json::to_string_pretty(&json!({ "steps": steps })).unwrap_or_default();
                format!("{}\n```json\n{block}\n```", self.prose)
            }
            None => self.prose.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub fixtures: Vec<Fixture>,
}

#[derive(Clone, Debug, Default)]
pub struct ScriptedProvider {
    fixtures: Vec<Fixture>,
    served: BTreeMap<usize, usize>,
    unavailable: bool,
    pub requests: Vec<PlanRequest>,
}

impl ScriptedProvider {
    pub fn new(fixtures: Vec<Fixture>) -> Self {
        Self { fixtures, ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        let file: FixtureFile = serde_json::from_str(&text).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self::new(file.fixtures))
    }

    /// A provider that fails every request, as an unreachable service would.
    pub fn unavailable() -> Self {
        Self { unavailable: true, ..Self::default() }
    }

    fn lookup(&self, req: &PlanRequest) -> Option<usize> {
        let key = req.intent.key();
        let exact = self.fixtures.iter().position(|f| f.intent == key && f.fingerprint.as_deref() == Some(req.fingerprint.as_str()));
        exact.or_else(|| self.fixtures.iter().position(|f| f.intent == key && f.fingerprint.is_none()))
    }
}

impl PlanProvider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&mut self, req: &PlanRequest) -> Result<String, LlmError> {
        self.requests.push(req.clone());
        if self.unavailable {
            return Err(LlmError::ProviderUnavailable("scripted provider is offline".into()));
        }
        let i = self.lookup(req).ok_or_else(|| LlmError::NoFixture { intent: req.intent.key(), fingerprint: req.fingerprint.clone() })?;
        let n = self.served.entry(i).or_default();
        let reply = self.fixtures[i].reply(*n);
        *n += 1;
        Ok(reply)
    }
}

pub struct LiveProvider {
    config: LlmConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

fn system_prompt() -> String {
    format!(
        "You help a user collect and transform web data in a workspace of tables and charts. \
         Reply with a short explanation and, when an action is needed, exactly one fenced ```json block \
         holding {{\"steps\": [{{\"tool\": <name>, \"args\": {{...}}}}]}}. Argument keys are camelCase. \
         Available tools: {}.",
        CATALOG.join(", ")
    )
}

impl LiveProvider {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let api_key = std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty());
        Ok(Self { config, api_key, client })
    }

    fn attempt(&self, key: &str, body: &Value) -> Result<String, LlmError> {
        let resp = self.client.post(&self.config.endpoint).bearer_auth(key).json(body).send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout(self.config.timeout_ms)
            } else {
                LlmError::ProviderUnavailable(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::Http(format!("status {status}")));
        }
        let v: Value = resp.json().map_err(|e| LlmError::Http(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::Http("reply has no message content".into()))
    }
}

impl PlanProvider for LiveProvider {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&mut self, req: &PlanRequest) -> Result<String, LlmError> {
        let key = self.api_key.clone().ok_or_else(|| LlmError::ProviderUnavailable(format!("{API_KEY_VAR} is not set")))?;
        let user = json!({ "intent": req.intent, "context": req.bundle });
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system_prompt()},
                {"role": "user", "content": user.to_string()},
            ],
        });
        match self.attempt(&key, &body) {
            Ok(r) => Ok(r),
            Err(first) => {
                log::warn!("provider request failed, retrying once: {first}");
                self.attempt(&key, &body)
            }
        }
    }
}
