//! Session files.
//!
//! ```text
//! #workbench-session
//! { "schemaVersion": 1, "history": ..., "snapshots": [...], ... }
//! ```
//!
//! Page html is stored beside the file in `<file>.pages/<snapshot-id>.html`
//! and referenced by id and content hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatMessage, Session};
use crate::extract::snapshot::content_hash;
use crate::extract::SnapshotStore;
use crate::guidance::{GuidanceConfig, GuidanceEngine, InteractionEvent};
use crate::llm::{ChatTurn, Gateway};
use crate::transform::ExecEnv;
use crate::workspace::{Workspace, WorkspaceError, WorkspaceHistory};

pub const SESSION_MAGIC: &str = "#workbench-session";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(String),
    #[error("not a session file (missing {SESSION_MAGIC} header)")]
    BadMagic,
    #[error("session schema version {got} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { got: u32 },
    #[error("corrupt session file: {0}")]
    Corrupt(String),
    #[error("snapshot {0} is missing")]
    MissingSnapshot(String),
    #[error("snapshot {0} does not match its recorded hash")]
    SnapshotMismatch(String),
    #[error("cannot rebuild workspace: {0}")]
    Rebuild(#[from] WorkspaceError),
    #[error("event log: {0}")]
    Events(String),
}

impl PersistError {
    pub fn code(&self) -> &'static str {
        match self {
            PersistError::Io(_) => "io",
            PersistError::BadMagic => "bad-magic",
            PersistError::SchemaVersion { .. } => "schema-version",
            PersistError::Corrupt(_) => "corrupt",
            PersistError::MissingSnapshot(_) => "missing-snapshot",
            PersistError::SnapshotMismatch(_) => "snapshot-mismatch",
            PersistError::Rebuild(_) => "rebuild",
            PersistError::Events(_) => "events",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotRef {
    pub snapshot_id: String,
    pub url: String,
    pub content_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SessionFile {
    pub schema_version: u32,
    pub config: GuidanceConfig,
    pub history: WorkspaceHistory,
    pub snapshots: Vec<SnapshotRef>,
    pub events: Vec<InteractionEvent>,
    pub chat: Vec<ChatMessage>,
    pub conversation: Vec<ChatTurn>,
    #[serde(default)]
    pub applied: BTreeMap<String, u64>,
}

impl SessionFile {
    pub fn capture(s: &Session) -> Self {
        SessionFile {
            schema_version: SCHEMA_VERSION,
            config: s.engine.config.clone(),
            history: s.ws.history(),
            snapshots: s
                .store
                .iter()
                .map(|p| SnapshotRef { snapshot_id: p.snapshot_id.clone(), url: p.url.clone(), content_hash: p.content_hash.clone() })
                .collect(),
            events: s.engine.log().to_vec(),
            chat: s.chat.clone(),
            conversation: s.gateway.conversation().to_vec(),
            applied: s.applied.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        format!("{SESSION_MAGIC}\n{}\n", serde_json::to_string_pretty(self).expect("session files serialize"))
    }

    pub fn parse(text: &str) -> Result<Self, PersistError> {
        let body = text.strip_prefix(SESSION_MAGIC).and_then(|r| r.strip_prefix('\n')).ok_or(PersistError::BadMagic)?;
        let raw: serde_json::Value = serde_json::from_str(body).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        let got = raw.get("schemaVersion").and_then(serde_json::Value::as_u64).ok_or_else(|| PersistError::Corrupt("missing schemaVersion".into()))?;
        if got != SCHEMA_VERSION as u64 {
            return Err(PersistError::SchemaVersion { got: got as u32 });
        }
        serde_json::from_value(raw).map_err(|e| PersistError::Corrupt(e.to_string()))
    }
}

fn pages_dir(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".pages");
    path.with_file_name(name)
}

fn io(e: std::io::Error) -> PersistError {
    PersistError::Io(e.to_string())
}

/// Writes the session file and its page store.
pub fn persist(session: &Session, path: &Path) -> Result<(), PersistError> {
    let dir = pages_dir(path);
    fs::create_dir_all(&dir).map_err(io)?;
    for snap in session.store.iter() {
        let file = dir.join(format!("{}.html", snap.snapshot_id));
        if !file.exists() {
            fs::write(&file, &snap.html).map_err(io)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, SessionFile::capture(session).to_text()).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Loads a session. Nothing is returned unless every part loads.
pub fn restore(path: &Path, gateway: Gateway) -> Result<Session, PersistError> {
    let text = fs::read_to_string(path).map_err(io)?;
    let file = SessionFile::parse(&text)?;
    let dir = pages_dir(path);
    let mut store = SnapshotStore::new();
    for r in &file.snapshots {
        let html = fs::read_to_string(dir.join(format!("{}.html", r.snapshot_id))).map_err(|_| PersistError::MissingSnapshot(r.snapshot_id.clone()))?;
        if content_hash(&html) != r.content_hash {
            return Err(PersistError::SnapshotMismatch(r.snapshot_id.clone()));
        }
        let snap = store.ingest(&html, &r.url).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        if snap.snapshot_id != r.snapshot_id {
            return Err(PersistError::SnapshotMismatch(r.snapshot_id.clone()));
        }
    }
    let ws = Workspace::from_history(&file.history, &ExecEnv { snapshots: &store })?;
    let mut engine = GuidanceEngine::new(file.config.clone());
    for ev in &file.events {
        engine.record_event(ev.clone()).map_err(|e| PersistError::Events(e.to_string()))?;
    }
    let mut gateway = gateway;
    for t in &file.conversation {
        gateway.push_turn(t.role, t.text.clone());
    }
    let mut s = Session::new(gateway, GuidanceConfig::default());
    s.ws = ws;
    s.store = store;
    s.engine = engine;
    s.chat = file.chat;
    s.applied = file.applied;
    Ok(s)
}

/// Serialization used for round-trip comparisons.
pub fn session_text(session: &Session) -> String {
    SessionFile::capture(session).to_text()
}
