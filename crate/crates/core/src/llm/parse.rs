//! Reads a model reply: free prose plus at most one fenced JSON plan.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::transform::{execute, ExecEnv, ToolCall, ToolError, ToolPlan};
use crate::workspace::WorkspaceState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "error", rename_all = "kebab-case")]
pub enum ParseError {
    #[error("malformed plan: {0}")]
    Malformed(String),
    #[error("reply holds {0} plans, expected one")]
    MultiplePlans(usize),
    #[error("step {step}: unknown tool {tool:?}")]
    UnknownTool { step: usize, tool: String },
    #[error("step {step}: {tool} is missing its arguments")]
    MissingArguments { step: usize, tool: String },
    #[error("step {step}: bad arguments for {tool}: {message}")]
    BadArguments { step: usize, tool: String, message: String },
    #[error("step {step}: no instance {id:?}")]
    UnknownInstance { step: usize, id: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParsedReply {
    pub prose: String,
    pub plan: Option<ToolPlan>,
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[A-Za-z]*[ \t]*\r?\n?(.*?)```").expect("valid regex"))
}

fn looks_like_plan(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|i| i.get("tool").is_some()),
        Value::Object(m) => m.contains_key("steps") || m.contains_key("tool"),
        _ => false,
    }
}

fn step_values(v: Value) -> Result<Vec<Value>, ParseError> {
    match v {
        Value::Array(items) => Ok(items),
        Value::Object(mut m) => match m.remove("steps") {
            Some(Value::Array(items)) => Ok(items),
            Some(_) => Err(ParseError::Malformed("\"steps\" must be an array".into())),
            None => Ok(vec![Value::Object(m)]),
        },
        _ => Err(ParseError::Malformed("expected an object or an array of steps".into())),
    }
}

fn parse_step(step: usize, v: &Value) -> Result<ToolCall, ParseError> {
    let obj = v.as_object().ok_or_else(|| ParseError::Malformed(format!("step {step} is not an object")))?;
    let tool = obj.get("tool").and_then(Value::as_str).ok_or_else(|| ParseError::Malformed(format!("step {step} has no tool name")))?;
    let args = match obj.get("args") {
        Some(a @ Value::Object(_)) => a.clone(),
        _ => return Err(ParseError::MissingArguments { step, tool: tool.to_string() }),
    };
    let call_id = obj.get("callId").and_then(Value::as_str).map(str::to_string).unwrap_or_else(|| format!("c{}", step + 1));
    ToolCall::parse(call_id, tool, args).map_err(|e| match e {
        ToolError::UnknownTool(t) => ParseError::UnknownTool { step, tool: t },
        other => ParseError::BadArguments { step, tool: tool.to_string(), message: other.to_string() },
    })
}

/// Parses a reply. Never panics: every input yields a reply or a
/// structured error. Instance references are checked against `state` as
/// it evolves through the plan's own steps, so later steps may use
/// instances created by earlier ones.
pub fn parse_tool_calls(text: &str, state: &WorkspaceState, env: &ExecEnv) -> Result<ParsedReply, ParseError> {
    let mut blocks = Vec::new();
    for cap in fence_re().captures_iter(text) {
        let body = cap.get(1).map_or("", |m| m.as_str()).trim();
        match serde_json::from_str::<Value>(body) {
            Ok(v) if looks_like_plan(&v) => blocks.push(v),
            Ok(_) => {}
            Err(e) if body.starts_with('{') || body.starts_with('[') => return Err(ParseError::Malformed(e.to_string())),
            Err(_) => {}
        }
    }
    let mut prose = fence_re().replace_all(text, "").trim().to_string();
    if blocks.is_empty() {
        let t = text.trim();
        if t.starts_with('{') || t.starts_with('[') {
            let v: Value = serde_json::from_str(t).map_err(|e| ParseError::Malformed(e.to_string()))?;
            if !looks_like_plan(&v) {
                return Err(ParseError::Malformed("JSON reply is not a plan".into()));
            }
            blocks.push(v);
            prose.clear();
        }
    }
    if blocks.len() > 1 {
        return Err(ParseError::MultiplePlans(blocks.len()));
    }
    let Some(block) = blocks.pop() else { return Ok(ParsedReply { prose, plan: None }) };
    let raw = step_values(block)?;
    if raw.is_empty() {
        return Err(ParseError::Malformed("plan has no steps".into()));
    }
    let steps = raw.iter().enumerate().map(|(i, v)| parse_step(i, v)).collect::<Result<Vec<_>, _>>()?;

    let mut scratch = Some(state.clone());
    for (step, call) in steps.iter().enumerate() {
        let Some(cur) = scratch.as_ref() else { break };
        if let Some(id) = call.tool.referenced_instances().into_iter().find(|id| cur.get(id).is_err()) {
            return Err(ParseError::UnknownInstance { step, id });
        }
        scratch = execute(cur, call, env).ok().map(|o| o.state);
    }
    Ok(ParsedReply { prose, plan: Some(ToolPlan::new(steps)) })
}
