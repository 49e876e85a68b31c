//! Wire frames between the engine and a UI or replay driver.
//!
//! A frame is one line: the byte length of the JSON payload, a space, the
//! payload, `\n`. The payload is `{"kind", "seq", "re"?, "body"}`.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::extract::PathSeg;
use crate::guidance::{InteractionEvent, Suggestion, Withdrawn};
use crate::table::SourceRef;
use crate::transform::ToolPlan;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_FRAME_BYTES: usize = 8 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    Hello,
    StateSync,
    Event,
    SuggestionPush,
    ApplySuggestion,
    ChatSend,
    ChatResponse,
    CaptureRequest,
    CaptureResult,
    TraceRequest,
    TraceResult,
    Error,
}

impl FrameKind {
    pub const ALL: [FrameKind; 12] = [
        FrameKind::Hello,
        FrameKind::StateSync,
        FrameKind::Event,
        FrameKind::SuggestionPush,
        FrameKind::ApplySuggestion,
        FrameKind::ChatSend,
        FrameKind::ChatResponse,
        FrameKind::CaptureRequest,
        FrameKind::CaptureResult,
        FrameKind::TraceRequest,
        FrameKind::TraceResult,
        FrameKind::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Hello => "hello",
            FrameKind::StateSync => "state-sync",
            FrameKind::Event => "event",
            FrameKind::SuggestionPush => "suggestion-push",
            FrameKind::ApplySuggestion => "apply-suggestion",
            FrameKind::ChatSend => "chat-send",
            FrameKind::ChatResponse => "chat-response",
            FrameKind::CaptureRequest => "capture-request",
            FrameKind::CaptureResult => "capture-result",
            FrameKind::TraceRequest => "trace-request",
            FrameKind::TraceResult => "trace-result",
            FrameKind::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<FrameKind> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// The reply kind for a client request; `None` for kinds only the
    /// engine sends. Any request may instead be answered with `error`.
    pub fn response(self) -> Option<FrameKind> {
        match self {
            FrameKind::Hello | FrameKind::StateSync | FrameKind::Event | FrameKind::ApplySuggestion => Some(FrameKind::StateSync),
            FrameKind::ChatSend => Some(FrameKind::ChatResponse),
            FrameKind::CaptureRequest => Some(FrameKind::CaptureResult),
            FrameKind::TraceRequest => Some(FrameKind::TraceResult),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub kind: FrameKind,
    pub seq: u64,
    /// Seq of the request this frame answers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<u64>,
    #[serde(default)]
    pub body: Value,
}

impl Frame {
    pub fn new(kind: FrameKind, seq: u64, body: impl Serialize) -> Self {
        Self { kind, seq, re: None, body: serde_json::to_value(body).unwrap_or(Value::Null) }
    }

    pub fn body_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ProtocolError> {
        serde_json::from_value(self.body.clone()).map_err(|e| ProtocolError::BadBody { kind: self.kind, detail: e.to_string() })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("frame of {len} bytes exceeds the {max} byte limit")]
    FrameTooLarge { len: usize, max: usize },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown frame kind {0:?}")]
    UnknownKind(String),
    #[error("bad {} body: {detail}", kind.as_str())]
    BadBody { kind: FrameKind, detail: String },
    #[error("seq {got} does not follow {last}")]
    SeqOutOfOrder { last: u64, got: u64 },
    #[error("protocol version {got} is not supported (engine speaks {PROTOCOL_VERSION})")]
    VersionMismatch { got: u32 },
    #[error("{} is not a request", .0.as_str())]
    NotARequest(FrameKind),
    #[error("expected hello first")]
    NoHello,
    #[error("io: {0}")]
    Io(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::FrameTooLarge { .. } => "frame-too-large",
            ProtocolError::Malformed(_) => "malformed-frame",
            ProtocolError::UnknownKind(_) => "unknown-kind",
            ProtocolError::BadBody { .. } => "bad-body",
            ProtocolError::SeqOutOfOrder { .. } => "seq-out-of-order",
            ProtocolError::VersionMismatch { .. } => "version-mismatch",
            ProtocolError::NotARequest(_) => "not-a-request",
            ProtocolError::NoHello => "no-hello",
            ProtocolError::Io(_) => "io",
        }
    }
}

/// Parses a payload. Unknown kinds are reported with the seq when one can
/// be read, so the reply can reference it.
pub fn decode_frame(payload: &str) -> Result<Frame, (ProtocolError, Option<u64>)> {
    let v: Value = serde_json::from_str(payload).map_err(|e| (ProtocolError::Malformed(e.to_string()), None))?;
    let seq = v.get("seq").and_then(Value::as_u64);
    let kind = v.get("kind").and_then(Value::as_str).ok_or((ProtocolError::Malformed("missing kind".into()), seq))?;
    if FrameKind::parse(kind).is_none() {
        return Err((ProtocolError::UnknownKind(kind.to_string()), seq));
    }
    serde_json::from_value(v.clone()).map_err(|e| (ProtocolError::Malformed(e.to_string()), seq))
}

pub fn encode_frame(frame: &Frame) -> String {
    let json = serde_json::to_string(frame).expect("frames serialize");
    format!("{} {json}\n", json.len())
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> std::io::Result<()> {
    w.write_all(encode_frame(frame).as_bytes())?;
    w.flush()
}

fn skip_line(r: &mut impl BufRead) -> std::io::Result<()> {
    let mut sink = Vec::new();
    loop {
        sink.clear();
        let n = r.by_ref().take(64 * 1024).read_until(b'\n', &mut sink)?;
        if n == 0 || sink.last() == Some(&b'\n') {
            return Ok(());
        }
    }
}

/// Reads the next frame payload; `Ok(None)` at end of stream. An oversized
/// or malformed line is consumed entirely so the stream stays in sync.
pub fn read_frame(r: &mut impl BufRead, max: usize) -> Result<Option<String>, ProtocolError> {
    let io = |e: std::io::Error| ProtocolError::Io(e.to_string());
    let mut buf = Vec::new();
    let limit = max as u64 + 24;
    let n = r.by_ref().take(limit).read_until(b'\n', &mut buf).map_err(io)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        if n as u64 == limit {
            skip_line(r).map_err(io)?;
            return Err(ProtocolError::FrameTooLarge { len: n, max });
        }
        // final line without a terminator
    } else {
        buf.pop();
    }
    let line = String::from_utf8(buf).map_err(|_| ProtocolError::Malformed("frame is not utf-8".into()))?;
    let (len, payload) = line.split_once(' ').ok_or_else(|| ProtocolError::Malformed("missing length prefix".into()))?;
    let len: usize = len.parse().map_err(|_| ProtocolError::Malformed(format!("bad length prefix {len:?}")))?;
    if len > max {
        return Err(ProtocolError::FrameTooLarge { len, max });
    }
    if payload.len() != len {
        return Err(ProtocolError::Malformed(format!("length prefix {len} but payload has {} bytes", payload.len())));
    }
    Ok(Some(payload.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HelloBody {
    pub protocol_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSyncBody {
    pub version: u64,
    /// A full sync replaces the client's model; a delta patches it.
    pub full: bool,
    /// Changed (or, when full, all) instances in export form.
    pub instances: Vec<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
    /// Hash of the full version document.
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionBody {
    pub tool: String,
    #[serde(default)]
    pub args: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_id: Option<String>,
}

/// A user interaction, optionally with the workspace change it made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventBody {
    pub event: InteractionEvent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionBody>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuggestionPushBody {
    pub published: Vec<Suggestion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub withdrawn: Vec<Withdrawn>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApplyBody {
    pub suggestion_id: String,
    /// Consent for plans touching instances off screen.
    #[serde(default)]
    pub permit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatSendBody {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatMessage {
    pub role: ChatRole,
    pub text: String,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attached_plan: Option<ToolPlan>,
    /// Version after an executed plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChatResponseBody {
    pub message: ChatMessage,
    pub version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

/// A click in capture mode. `html` registers a fresh snapshot of the page;
/// the node is given by id or by DOM path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaptureRequestBody {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub html: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dom_path: Option<Vec<PathSeg>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaptureResultBody {
    pub snapshot_id: String,
    pub node_id: usize,
    pub value: Value,
    pub source: SourceRef,
    pub dom_path: Vec<PathSeg>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRequestBody {
    pub instance_id: String,
    pub row: usize,
    pub column: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceResultBody {
    pub snapshot_id: String,
    pub node_id: usize,
    pub url: String,
    pub stale: bool,
    pub dom_path: Vec<PathSeg>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<String>,
}

impl ErrorBody {
    pub fn new(code: impl Into<String>, message: impl ToString) -> Self {
        Self { code: code.into(), message: message.to_string(), candidates: Vec::new() }
    }
}
