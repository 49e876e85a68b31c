//! Virtual users: what a replay does next.
//!
//! Driver steps are JSON objects tagged by `action`:
//!
//! | action         | fields                                              |
//! |----------------|-----------------------------------------------------|
//! | workspace      | title                                               |
//! | view           | view (editor, canvas, page), instance?, page?       |
//! | create-table   | id, name?, columns [{name, type}]                   |
//! | capture        | page, css, index, instance, row, column             |
//! | select         | page, css, index                                    |
//! | edit           | instance, row, column, value (null clears)          |
//! | tool           | tool, args, event? (defaults to an editor view)     |
//! | advance-clock  | ms                                                  |
//! | apply          | rule, permit?                                       |
//! | dismiss        | rule                                                |
//! | chat           | text                                                |
//! | trace          | instance, row, column                               |
//!
//! Every step but `advance-clock` moves the replay clock by one step
//! interval first. `advance-clock` is how a driver lets the user go idle.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::guidance::{EventKind, RuleId, View};
use crate::llm::{ContextBundle, Intent, LlmError, PlanProvider, PlanRequest};
use crate::table::Column;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum DriverStep {
    Workspace {
        title: String,
    },
    View {
        view: View,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        page: Option<String>,
    },
    CreateTable {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        columns: Vec<Column>,
    },
    Capture {
        page: String,
        css: String,
        #[serde(default)]
        index: usize,
        instance: String,
        row: usize,
        column: String,
    },
    Select {
        page: String,
        css: String,
        #[serde(default)]
        index: usize,
    },
    Edit {
        instance: String,
        row: usize,
        column: String,
        value: Option<String>,
    },
    Tool {
        tool: String,
        args: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        event: Option<EventKind>,
    },
    AdvanceClock {
        ms: u64,
    },
    Apply {
        rule: RuleId,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        permit: bool,
    },
    Dismiss {
        rule: RuleId,
    },
    Chat {
        text: String,
    },
    Trace {
        instance: String,
        row: usize,
        column: String,
    },
}

impl DriverStep {
    pub fn name(&self) -> &'static str {
        match self {
            DriverStep::Workspace { .. } => "workspace",
            DriverStep::View { .. } => "view",
            DriverStep::CreateTable { .. } => "create-table",
            DriverStep::Capture { .. } => "capture",
            DriverStep::Select { .. } => "select",
            DriverStep::Edit { .. } => "edit",
            DriverStep::Tool { .. } => "tool",
            DriverStep::AdvanceClock { .. } => "advance-clock",
            DriverStep::Apply { .. } => "apply",
            DriverStep::Dismiss { .. } => "dismiss",
            DriverStep::Chat { .. } => "chat",
            DriverStep::Trace { .. } => "trace",
        }
    }
}

/// A suggestion as the user sees it in the panel.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OfferedSuggestion {
    pub id: String,
    pub rule: RuleId,
    pub description: String,
    pub in_situ: bool,
}

/// What the user can see before choosing a step.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Observation<'a> {
    pub statement: &'a str,
    pub pages: Vec<String>,
    /// Instance summaries from the client mirror.
    pub instances: Vec<Value>,
    pub suggestions: Vec<OfferedSuggestion>,
    /// Interaction log so far, including `[INVALID ACTION]` lines.
    pub log: &'a [String],
}

#[derive(Clone, Debug, PartialEq)]
pub enum UserMove {
    Step(DriverStep),
    Done,
    /// The user's reply could not be read as a step.
    Unreadable(String),
}

pub trait VirtualUser {
    fn name(&self) -> &str;
    fn next(&mut self, obs: &Observation) -> Result<UserMove, LlmError>;
}

/// Plays a fixed step list. After an invalid step it moves on to the next
/// one, so a script can carry its own recovery step.
#[derive(Clone, Debug, Default)]
pub struct ScriptedUser {
    steps: Vec<DriverStep>,
    at: usize,
}

impl ScriptedUser {
    pub fn new(steps: Vec<DriverStep>) -> Self {
        Self { steps, at: 0 }
    }
}

impl VirtualUser for ScriptedUser {
    fn name(&self) -> &str {
        "scripted"
    }

    fn next(&mut self, _obs: &Observation) -> Result<UserMove, LlmError> {
        let m = self.steps.get(self.at).cloned().map_or(UserMove::Done, UserMove::Step);
        self.at += 1;
        Ok(m)
    }
}

/// Asks a model for one step at a time. The observation, with any
/// `[INVALID ACTION]` lines in its log, is the whole prompt, so a rejected
/// step is regenerated on the next call.
pub struct ModelUser {
    provider: Box<dyn PlanProvider>,
    /// Most recent log lines sent with each request.
    pub log_window: usize,
}

impl ModelUser {
    pub fn new(provider: Box<dyn PlanProvider>) -> Self {
        Self { provider, log_window: 15 }
    }
}

const MODEL_USER_BRIEF: &str = "You are a user completing the task below in a data workbench. \
Reply with exactly one JSON object: the next action, tagged by \"action\" (workspace, view, create-table, \
capture, select, edit, tool, advance-clock, apply, dismiss, chat, trace), or {\"action\": \"done\"} when \
the task is complete. Lines starting with [INVALID ACTION] are actions that could not be performed; \
choose a different one.";

pub fn prompt_for(obs: &Observation, log_window: usize) -> String {
    let tail = &obs.log[obs.log.len().saturating_sub(log_window)..];
    let view = json!({
        "task": obs.statement,
        "pages": obs.pages,
        "instances": obs.instances,
        "suggestions": obs.suggestions,
        "log": tail,
    });
    format!("{MODEL_USER_BRIEF}\n{view}")
}

/// Reads a step from a reply: a bare object or the first fenced block.
pub fn read_move(reply: &str) -> UserMove {
    let body = match reply.find("```") {
        Some(open) => {
            let rest = &reply[open + 3..];
            let rest = rest.split_once('\n').map_or(rest, |(_, r)| r);
            rest.split("```").next().unwrap_or(rest)
        }
        None => reply,
    };
    let v: Value = match serde_json::from_str(body.trim()) {
        Ok(v) => v,
        Err(e) => return UserMove::Unreadable(format!("not JSON: {e}")),
    };
    if v.get("action").and_then(Value::as_str) == Some("done") {
        return UserMove::Done;
    }
    match serde_json::from_value(v) {
        Ok(s) => UserMove::Step(s),
        Err(e) => UserMove::Unreadable(e.to_string()),
    }
}

impl VirtualUser for ModelUser {
    fn name(&self) -> &str {
        self.provider.name()
    }

    fn next(&mut self, obs: &Observation) -> Result<UserMove, LlmError> {
        let req = PlanRequest {
            intent: Intent::Chat { text: prompt_for(obs, self.log_window) },
            fingerprint: "virtual-user".into(),
            bundle: ContextBundle::default(),
        };
        Ok(read_move(&self.provider.complete(&req)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_round_trip() {
        let text = r#"[
            {"action": "workspace", "title": "Buying a camera"},
            {"action": "capture", "page": "https://a.example/", "css": "h2", "index": 1, "instance": "T", "row": 1, "column": "Title"},
            {"action": "advance-clock", "ms": 6000},
            {"action": "apply", "rule": "batch-extraction"},
            {"action": "tool", "tool": "tableSort", "args": {"instanceId": "T", "columnName": "Price", "order": "asc"}}
        ]"#;
        let steps: Vec<DriverStep> = serde_json::from_str(text).unwrap();
        assert_eq!(steps[3], DriverStep::Apply { rule: RuleId::BatchExtraction, permit: false });
        let again: Vec<DriverStep> = serde_json::from_value(serde_json::to_value(&steps).unwrap()).unwrap();
        assert_eq!(steps, again);
    }

    #[test]
    fn replies_are_read_as_moves() {
        assert_eq!(read_move("{\"action\": \"done\"}"), UserMove::Done);
        assert_eq!(
            read_move("Next:\n```json\n{\"action\": \"chat\", \"text\": \"hi\"}\n```"),
            UserMove::Step(DriverStep::Chat { text: "hi".into() })
        );
        assert!(matches!(read_move("click the button"), UserMove::Unreadable(_)));
        assert!(matches!(read_move("{\"action\": \"fly\"}"), UserMove::Unreadable(_)));
    }
}
