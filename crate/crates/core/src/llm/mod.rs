//! Language-model gateway: context assembly, providers, reply parsing and
//! the invalid-action retry loop.

pub mod context;
pub mod parse;
pub mod provider;

use serde::{Deserialize, Serialize};

pub use context::{build_context, fingerprint, ChatTurn, ContextBundle, ContextOptions, HtmlContext, Role, UserFocus};
pub use parse::{parse_tool_calls, ParseError, ParsedReply};
pub use provider::{Fixture, FixtureFile, Intent, LiveProvider, PlanProvider, PlanRequest, ScriptedProvider, API_KEY_VAR};

use crate::guidance::{simulate, Focus, InteractionEvent, MacroPlanner, MacroRequest};
use crate::transform::{ExecEnv, ToolPlan};
use crate::workspace::WorkspaceState;

pub const INVALID_ACTION: &str = "[INVALID ACTION]";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("provider timed out after {0} ms")]
    Timeout(u64),
    #[error("provider error: {0}")]
    Http(String),
    #[error("no scripted reply for {intent} ({fingerprint})")]
    NoFixture { intent: String, fingerprint: String },
    #[error("no valid plan after {attempts} attempts: {last}")]
    InvalidReply { attempts: usize, last: String },
    #[error("configuration: {0}")]
    Config(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::ProviderUnavailable(_) => "provider-unavailable",
            LlmError::Timeout(_) => "provider-timeout",
            LlmError::Http(_) => "provider-error",
            LlmError::NoFixture { .. } => "no-fixture",
            LlmError::InvalidReply { .. } => "invalid-reply",
            LlmError::Config(_) => "config",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    #[default]
    Scripted,
    Live,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct LlmConfig {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    /// Re-asks after a reply is rejected.
    pub max_retries: usize,
    /// Fixture file for the scripted provider.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<String>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Scripted,
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "default".into(),
            timeout_ms: 30_000,
            max_retries: 2,
            fixtures: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatewayReply {
    pub prose: String,
    pub plan: Option<ToolPlan>,
    pub attempts: usize,
    /// Rejection notes sent back to the provider along the way.
    pub markers: Vec<String>,
}

pub struct Gateway {
    provider: Box<dyn PlanProvider>,
    pub config: LlmConfig,
    pub options: ContextOptions,
    conversation: Vec<ChatTurn>,
}

impl Gateway {
    pub fn new(provider: Box<dyn PlanProvider>, config: LlmConfig) -> Self {
        Self { provider, config, options: ContextOptions::default(), conversation: Vec::new() }
    }

    pub fn from_config(config: LlmConfig) -> Result<Self, LlmError> {
        let provider: Box<dyn PlanProvider> = match config.kind {
            ProviderKind::Scripted => match &config.fixtures {
                Some(path) => Box::new(ScriptedProvider::load(std::path::Path::new(path))?),
                None => Box::new(ScriptedProvider::default()),
            },
            ProviderKind::Live => Box::new(LiveProvider::new(config.clone())?),
        };
        Ok(Self::new(provider, config))
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn conversation(&self) -> &[ChatTurn] {
        &self.conversation
    }

    pub fn push_turn(&mut self, role: Role, text: impl Into<String>) {
        self.conversation.push(ChatTurn { role, text: text.into() });
    }

    /// Asks the provider for a plan, re-asking with an `[INVALID ACTION]`
    /// note when the reply does not parse or its plan does not simulate.
    /// A prose-only reply is accepted unless `require_plan`.
    #[allow(clippy::too_many_arguments)]
    pub fn request(
        &mut self,
        intent: Intent,
        state: &WorkspaceState,
        env: &ExecEnv,
        focus: &Focus,
        events: &[InteractionEvent],
        require_plan: bool,
    ) -> Result<GatewayReply, LlmError> {
        let mut bundle = build_context(state, env.snapshots, focus, &self.conversation, events, self.options);
        let fp = fingerprint(state, &intent.trigger_id());
        let mut markers = Vec::new();
        let mut last = String::new();
        for attempt in 1..=self.config.max_retries + 1 {
            bundle.interaction_history.markers = markers.clone();
            let req = PlanRequest { intent: intent.clone(), fingerprint: fp.clone(), bundle: bundle.clone() };
            let text = self.provider.complete(&req)?;
            let problem = match parse_tool_calls(&text, state, env) {
                Err(e) => e.to_string(),
                Ok(r) => match &r.plan {
                    None if require_plan => "reply has no plan".to_string(),
                    None => return Ok(GatewayReply { prose: r.prose, plan: None, attempts: attempt, markers }),
                    Some(p) => match simulate(p, state, env) {
                        Ok(_) => return Ok(GatewayReply { prose: r.prose, plan: r.plan, attempts: attempt, markers }),
                        Err(f) => f.to_string(),
                    },
                },
            };
            log::debug!("rejected reply on attempt {attempt}: {problem}");
            markers.push(format!("{INVALID_ACTION} {problem}"));
            last = problem;
        }
        Err(LlmError::InvalidReply { attempts: self.config.max_retries + 1, last })
    }
}

impl MacroPlanner for Gateway {
    fn plan_for(&mut self, req: &MacroRequest) -> Result<ToolPlan, LlmError> {
        let reply = self.request(Intent::Suggest { rule: req.firing.rule }, req.state, req.env, req.focus, req.events, true)?;
        reply.plan.ok_or_else(|| LlmError::InvalidReply { attempts: reply.attempts, last: "reply has no plan".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::snapshot::SnapshotStore;
    use crate::table::{Column, TableInstance};
    use crate::value::{CellValue, ValueType};
    use crate::workspace::Instance;
    use serde_json::json;

    #[test]
    fn invalid_replies_are_retried_with_a_marker() {
        let t = TableInstance::from_values("T1", "T1", vec![Column::new("Price", ValueType::Number)], vec![vec![CellValue::number(2.0)]]).unwrap();
        let mut state = WorkspaceState::default();
        state.instances.insert("T1".into(), Instance::Table(t));
        let store = SnapshotStore::new();
        let env = ExecEnv { snapshots: &store };
        let good = json!([{"tool": "tableSort", "args": {"instanceId": "T1", "columnName": "Price", "order": "asc"}}]);
        let fx = Fixture {
            intent: "chat:sort".into(),
            fingerprint: None,
            replies: vec![
                "```json\n[{\"tool\":\"tableSort\",\"args\":{\"instanceId\":\"T1\",\"columnName\":\"Nope\",\"order\":\"asc\"}}]\n```".into(),
                format!("```json\n{good}\n```"),
            ],
            plan: None,
            prose: String::new(),
        };
        let mut gw = Gateway::new(Box::new(ScriptedProvider::new(vec![fx.clone()])), LlmConfig::default());
        let r = gw.request(Intent::Chat { text: "sort".into() }, &state, &env, &Focus::default(), &[], true).unwrap();
        assert_eq!(r.attempts, 2);
        assert_eq!(r.markers.len(), 1);
        assert!(r.markers[0].starts_with(INVALID_ACTION));

        let bad_only = Fixture { replies: vec![fx.replies[0].clone()], ..fx };
        let mut cfg = LlmConfig::default();
        cfg.max_retries = 2;
        let mut gw = Gateway::new(Box::new(ScriptedProvider::new(vec![bad_only])), cfg);
        let err = gw.request(Intent::Chat { text: "sort".into() }, &state, &env, &Focus::default(), &[], true).unwrap_err();
        assert!(matches!(err, LlmError::InvalidReply { attempts: 3, .. }));
    }
}
