//! One engine session: the workspace, its snapshots, the guidance engine
//! and the chat gateway behind the wire protocol.

pub mod mentions;
pub mod persist;
pub mod protocol;
pub mod ui;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde_json::Value;
use thiserror::Error;

pub use mentions::{resolve_mentions, MentionError, Rejection};
pub use persist::{PersistError, SessionFile, SCHEMA_VERSION, SESSION_MAGIC};
pub use protocol::*;

use crate::extract::{capture_element, trace_source, ExtractError};
use crate::guidance::{CycleReport, EventKind, GuidanceConfig, GuidanceEngine, GuidanceError, InteractionEvent, TemplatesOnly, Withdrawn};
use crate::llm::{Gateway, Intent, LlmError, Role};
use crate::transform::{ExecEnv, ToolCall, ToolError};
use crate::viz::cell_json;
use crate::workspace::{PlanFailure, Workspace};
use crate::extract::SnapshotStore;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Mention(#[from] MentionError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Plan(#[from] PlanFailure),
    #[error("cell {instance_id}[{row}].{column} has no source")]
    NoSource { instance_id: String, row: usize, column: String },
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Protocol(e) => e.code(),
            SessionError::Tool(e) => e.code(),
            SessionError::Guidance(e) => e.code(),
            SessionError::Mention(_) => "unresolved-mention",
            SessionError::Llm(e) => e.code(),
            SessionError::Extract(_) => "extract",
            SessionError::Plan(_) => "plan-failed",
            SessionError::NoSource { .. } => "no-source",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let mut b = ErrorBody::new(self.code(), self);
        if let SessionError::Mention(MentionError(rs)) = self {
            b.candidates = rs.iter().flat_map(|r| r.candidates.iter().cloned()).collect();
        }
        b
    }
}

/// How a session answers `event` frames: whether it runs a guidance cycle
/// after each one, and with which planner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MacroSource {
    /// Ask the gateway, falling back to templates.
    #[default]
    Gateway,
    TemplatesOnly,
}

pub struct Session {
    pub ws: Workspace,
    pub store: SnapshotStore,
    pub engine: GuidanceEngine,
    pub gateway: Gateway,
    pub macro_source: MacroSource,
    pub chat: Vec<ChatMessage>,
    greeted: bool,
    closed: bool,
    last_in: Option<u64>,
    out_seq: u64,
    push_seq: u64,
    synced: BTreeMap<String, Value>,
    applied: BTreeMap<String, u64>,
    calls: u64,
    chats: u64,
}

impl Session {
    pub fn new(gateway: Gateway, config: GuidanceConfig) -> Self {
        Self {
            ws: Workspace::new(),
            store: SnapshotStore::new(),
            engine: GuidanceEngine::new(config),
            gateway,
            macro_source: MacroSource::Gateway,
            chat: Vec::new(),
            greeted: false,
            closed: false,
            last_in: None,
            out_seq: 0,
            push_seq: 0,
            synced: BTreeMap::new(),
            applied: BTreeMap::new(),
            calls: 0,
            chats: 0,
        }
    }

    /// Set after a version mismatch; the transport should close.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Suggestion id to the version its application produced.
    pub fn applied(&self) -> &BTreeMap<String, u64> {
        &self.applied
    }

    pub fn hash(&self) -> String {
        self.ws.document(self.ws.current_id()).map(|d| d.hash()).unwrap_or_default()
    }

    fn reply(&mut self, kind: FrameKind, re: Option<u64>, body: impl serde::Serialize) -> Frame {
        self.out_seq += 1;
        Frame { re, ..Frame::new(kind, self.out_seq, body) }
    }

    fn error_frame(&mut self, re: Option<u64>, body: ErrorBody) -> Frame {
        self.reply(FrameKind::Error, re, body)
    }

    fn push(&mut self, body: SuggestionPushBody) -> Option<Frame> {
        if body.published.is_empty() && body.withdrawn.is_empty() {
            return None;
        }
        self.push_seq += 1;
        Some(Frame::new(FrameKind::SuggestionPush, self.push_seq, body))
    }

    /// Full or delta view of the current version. A delta carries the
    /// instances whose export changed since the last sync.
    pub fn state_sync(&mut self, full: bool) -> StateSyncBody {
        let version = self.ws.current_id();
        let doc = self.ws.document(version).expect("current version exists");
        let now: BTreeMap<String, Value> =
            doc.instances.iter().map(|v| (v.get("id").and_then(Value::as_str).unwrap_or_default().to_string(), v.clone())).collect();
        let (instances, removed) = if full {
            (now.values().cloned().collect(), Vec::new())
        } else {
            let changed = now.iter().filter(|(id, v)| self.synced.get(*id) != Some(v)).map(|(_, v)| v.clone()).collect();
            let removed = self.synced.keys().filter(|id| !now.contains_key(*id)).cloned().collect();
            (changed, removed)
        };
        self.synced = now;
        StateSyncBody { version, full, instances, removed, hash: doc.hash() }
    }

    fn planner_cycle(&mut self, now: u64) -> Result<CycleReport, GuidanceError> {
        let env = ExecEnv { snapshots: &self.store };
        match self.macro_source {
            MacroSource::Gateway => self.engine.cycle(&self.ws, &env, &mut self.gateway, now),
            MacroSource::TemplatesOnly => self.engine.cycle(&self.ws, &env, &mut TemplatesOnly, now),
        }
    }

    /// Runs one evaluation cycle at `now`.
    pub fn cycle(&mut self, now: u64) -> Result<SuggestionPushBody, SessionError> {
        let r = self.planner_cycle(now)?;
        Ok(SuggestionPushBody { published: r.published, withdrawn: r.withdrawn })
    }

    fn next_call_id(&mut self, given: Option<String>) -> String {
        self.calls += 1;
        given.unwrap_or_else(|| format!("user{}", self.calls))
    }

    /// Applies the event's action, if any, records the event and runs a
    /// cycle at its timestamp.
    pub fn record(&mut self, body: EventBody) -> Result<SuggestionPushBody, SessionError> {
        if body.event.timestamp < self.engine.clock() {
            return Err(GuidanceError::ClockRegression { last: self.engine.clock(), got: body.event.timestamp }.into());
        }
        if let Some(action) = body.action {
            let id = self.next_call_id(action.call_id);
            let call = ToolCall::parse(id, &action.tool, action.args)?;
            let env = ExecEnv { snapshots: &self.store };
            self.ws.apply(call, &env)?;
        }
        let now = body.event.timestamp;
        let mut withdrawn = self.engine.record_event(body.event)?;
        let mut push = self.cycle(now)?;
        withdrawn.append(&mut push.withdrawn);
        push.withdrawn = withdrawn;
        Ok(push)
    }

    /// Executes an offered suggestion once; repeating the request returns
    /// the version the first application produced.
    pub fn apply_suggestion(&mut self, id: &str, permit: bool, timestamp: Option<u64>) -> Result<(u64, SuggestionPushBody), SessionError> {
        if let Some(v) = self.applied.get(id) {
            return Ok((*v, SuggestionPushBody::default()));
        }
        let env = ExecEnv { snapshots: &self.store };
        let applied = self.engine.apply(&mut self.ws, &env, id, permit)?;
        let version = applied.last().map_or(self.ws.current_id(), |a| a.version_id);
        self.applied.insert(id.to_string(), version);
        let ts = timestamp.unwrap_or(self.engine.clock()).max(self.engine.clock());
        let mut withdrawn = self.engine.record_event(InteractionEvent::new(ts, EventKind::SuggestionApplied { suggestion_id: id.to_string() }))?;
        let mut push = self.cycle(ts)?;
        withdrawn.append(&mut push.withdrawn);
        push.withdrawn = withdrawn;
        Ok((version, push))
    }

    /// Chat turn: resolves mentions, asks the gateway and executes the
    /// returned plan at once. A failing plan leaves the workspace as it
    /// was and is reported in the assistant message.
    pub fn handle_chat(&mut self, text: &str, timestamp: Option<u64>) -> Result<(ChatResponseBody, Vec<Withdrawn>), SessionError> {
        let (mentions, rejections) = resolve_mentions(text, self.ws.state());
        if !rejections.is_empty() {
            return Err(MentionError(rejections).into());
        }
        let ts = timestamp.unwrap_or(self.engine.clock()).max(self.engine.clock());
        let withdrawn = self.engine.record_event(InteractionEvent::new(ts, EventKind::ChatSent { text: text.to_string() }))?;
        self.chat.push(ChatMessage { role: ChatRole::User, text: text.to_string(), mentions, attached_plan: None, version: None });
        self.gateway.push_turn(Role::User, text);

        let env = ExecEnv { snapshots: &self.store };
        let focus = self.engine.focus().clone();
        let events = self.engine.context_events().to_vec();
        let reply = self.gateway.request(Intent::Chat { text: text.to_string() }, self.ws.state(), &env, &focus, &events, false);
        let (message, error) = match reply {
            Err(e) => (ChatMessage { role: ChatRole::Assistant, text: format!("Sorry, I could not do that: {e}"), mentions: vec![], attached_plan: None, version: None }, Some(SessionError::from(e).body())),
            Ok(r) => match r.plan {
                None => (ChatMessage { role: ChatRole::Assistant, text: r.prose, mentions: vec![], attached_plan: None, version: None }, None),
                Some(plan) => {
                    self.chats += 1;
                    let plan_id = format!("chat{}", self.chats);
                    let prose = if r.prose.trim().is_empty() { plan.rendered_steps.join(" ") } else { r.prose };
                    match self.ws.execute_plan(&plan_id, &plan.steps, &env) {
                        Ok(applied) => {
                            let v = applied.last().map_or(self.ws.current_id(), |a| a.version_id);
                            (ChatMessage { role: ChatRole::Assistant, text: prose, mentions: vec![], attached_plan: Some(plan), version: Some(v) }, None)
                        }
                        Err(f) => {
                            let body = SessionError::Plan(f.clone()).body();
                            let text = format!("{prose}\nThat plan failed and nothing was changed: {f}");
                            (ChatMessage { role: ChatRole::Assistant, text, mentions: vec![], attached_plan: Some(plan), version: None }, Some(body))
                        }
                    }
                }
            },
        };
        self.gateway.push_turn(Role::Assistant, message.text.clone());
        self.chat.push(message.clone());
        Ok((ChatResponseBody { message, version: self.ws.current_id(), error }, withdrawn))
    }

    pub fn capture(&mut self, req: CaptureRequestBody) -> Result<CaptureResultBody, SessionError> {
        let snap = match &req.html {
            Some(html) => self.store.ingest(html, &req.url)?,
            None => self.store.resolve(&req.url)?.clone(),
        };
        let node = match (req.node_id, &req.dom_path) {
            (Some(n), _) => n,
            (None, Some(path)) => snap.dom.replay_path(path).ok_or(ExtractError::SourceGone)?,
            (None, None) => return Err(ToolError::BadArgument("nodeId or domPath is required".into()).into()),
        };
        let (value, source) = capture_element(&snap, node)?;
        Ok(CaptureResultBody { snapshot_id: snap.snapshot_id.clone(), node_id: node, value: cell_json(&value), source, dom_path: snap.dom.dom_path(node) })
    }

    pub fn trace(&self, req: &TraceRequestBody) -> Result<TraceResultBody, SessionError> {
        let t = self.ws.state().table(&req.instance_id)?;
        let c = t.column_index(&req.column).ok_or_else(|| ToolError::UnknownColumn(req.column.clone()))?;
        let no_source = || SessionError::NoSource { instance_id: req.instance_id.clone(), row: req.row, column: req.column.clone() };
        let source = t.rows.get(req.row).and_then(|r| r[c].source.as_ref()).ok_or_else(no_source)?;
        let tr = trace_source(&self.store, source)?;
        let snap = self.store.get(&tr.snapshot_id).ok_or(ExtractError::SourceGone)?;
        Ok(TraceResultBody { dom_path: snap.dom.dom_path(tr.node_id), snapshot_id: tr.snapshot_id, node_id: tr.node_id, url: tr.url, stale: tr.stale })
    }

    /// Decodes and handles one payload.
    pub fn handle_payload(&mut self, payload: &str) -> Vec<Frame> {
        match decode_frame(payload) {
            Ok(f) => self.handle(f),
            Err((e, seq)) => vec![self.error_frame(seq, ErrorBody::new(e.code(), &e))],
        }
    }

    /// Handles one client frame. The first frame is the response (or an
    /// error). A chat response is followed by a state-sync delta, and any
    /// request may be followed by a suggestion push.
    pub fn handle(&mut self, frame: Frame) -> Vec<Frame> {
        let re = Some(frame.seq);
        if let Some(last) = self.last_in {
            if frame.seq <= last {
                let e = ProtocolError::SeqOutOfOrder { last, got: frame.seq };
                return vec![self.error_frame(re, ErrorBody::new(e.code(), &e))];
            }
        }
        self.last_in = Some(frame.seq);
        if frame.kind.response().is_none() {
            let e = ProtocolError::NotARequest(frame.kind);
            return vec![self.error_frame(re, ErrorBody::new(e.code(), &e))];
        }
        if !self.greeted && frame.kind != FrameKind::Hello {
            return vec![self.error_frame(re, ErrorBody::new(ProtocolError::NoHello.code(), ProtocolError::NoHello))];
        }
        match self.dispatch(&frame) {
            Ok(frames) => frames,
            Err(e) => vec![self.error_frame(re, e.body())],
        }
    }

    fn dispatch(&mut self, frame: &Frame) -> Result<Vec<Frame>, SessionError> {
        let re = Some(frame.seq);
        let mut out = Vec::new();
        match frame.kind {
            FrameKind::Hello => {
                let hello: HelloBody = frame.body_as()?;
                if hello.protocol_version != PROTOCOL_VERSION {
                    self.closed = true;
                    return Err(ProtocolError::VersionMismatch { got: hello.protocol_version }.into());
                }
                self.greeted = true;
                let body = self.state_sync(true);
                out.push(self.reply(FrameKind::StateSync, re, body));
            }
            FrameKind::StateSync => {
                let body = self.state_sync(true);
                out.push(self.reply(FrameKind::StateSync, re, body));
            }
            FrameKind::Event => {
                let push = self.record(frame.body_as()?)?;
                let body = self.state_sync(false);
                out.push(self.reply(FrameKind::StateSync, re, body));
                out.extend(self.push(push));
            }
            FrameKind::ApplySuggestion => {
                let req: ApplyBody = frame.body_as()?;
                let (_, push) = self.apply_suggestion(&req.suggestion_id, req.permit, req.timestamp)?;
                let body = self.state_sync(false);
                out.push(self.reply(FrameKind::StateSync, re, body));
                out.extend(self.push(push));
            }
            FrameKind::ChatSend => {
                let req: ChatSendBody = frame.body_as()?;
                let (resp, withdrawn) = self.handle_chat(&req.text, req.timestamp)?;
                out.push(self.reply(FrameKind::ChatResponse, re, resp));
                let body = self.state_sync(false);
                out.push(self.reply(FrameKind::StateSync, re, body));
                out.extend(self.push(SuggestionPushBody { published: vec![], withdrawn }));
            }
            FrameKind::CaptureRequest => {
                let body = self.capture(frame.body_as()?)?;
                out.push(self.reply(FrameKind::CaptureResult, re, body));
            }
            FrameKind::TraceRequest => {
                let body = self.trace(&frame.body_as()?)?;
                out.push(self.reply(FrameKind::TraceResult, re, body));
            }
            other => return Err(ProtocolError::NotARequest(other).into()),
        }
        Ok(out)
    }
}

/// Serves one connection until end of stream or a version mismatch.
/// Transport faults and bad frames are answered with error frames.
pub fn serve(session: &mut Session, reader: &mut impl BufRead, writer: &mut impl Write) -> std::io::Result<()> {
    loop {
        let frames = match read_frame(reader, MAX_FRAME_BYTES) {
            Ok(None) => return Ok(()),
            Ok(Some(payload)) => session.handle_payload(&payload),
            Err(ProtocolError::Io(e)) => return Err(std::io::Error::other(e)),
            Err(e) => vec![session.error_frame(None, ErrorBody::new(e.code(), &e))],
        };
        for f in &frames {
            write_frame(writer, f)?;
        }
        if session.is_closed() {
            return Ok(());
        }
    }
}
