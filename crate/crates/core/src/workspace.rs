//! Versioned workspace: every successful tool call produces an immutable
//! version. Undo and redo move a cursor through the version tree; plans
//! commit all-or-nothing.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::table::{LineageRef, TableInstance};
use crate::transform::{execute, Effect, ExecEnv, ToolCall, ToolError};
use crate::viz::{cell_json, VisualizationInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Instance {
    Table(TableInstance),
    Visualization(VisualizationInstance),
}

impl Instance {
    pub fn id(&self) -> &str {
        match self {
            Instance::Table(t) => &t.id,
            Instance::Visualization(v) => &v.id,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Instance::Table(t) => &t.name,
            Instance::Visualization(v) => &v.name,
        }
    }

    pub fn set_id(&mut self, id: String) {
        match self {
            Instance::Table(t) => t.id = id,
            Instance::Visualization(v) => v.id = id,
        }
    }

    pub fn lineage(&self) -> &[LineageRef] {
        match self {
            Instance::Table(t) => &t.lineage,
            Instance::Visualization(v) => &v.lineage,
        }
    }

    fn lineage_mut(&mut self) -> &mut Vec<LineageRef> {
        match self {
            Instance::Table(t) => &mut t.lineage,
            Instance::Visualization(v) => &mut v.lineage,
        }
    }

    pub fn as_table(&self) -> Option<&TableInstance> {
        match self {
            Instance::Table(t) => Some(t),
            Instance::Visualization(_) => None,
        }
    }

    pub fn as_viz(&self) -> Option<&VisualizationInstance> {
        match self {
            Instance::Visualization(v) => Some(v),
            Instance::Table(_) => None,
        }
    }
}

/// A saved sequence of steps replayable on another table. Steps use the
/// `$instance` placeholder for their target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleObject {
    pub name: String,
    pub steps: Vec<ToolCall>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceState {
    pub instances: BTreeMap<String, Instance>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rules: BTreeMap<String, RuleObject>,
}

impl WorkspaceState {
    pub fn get(&self, id: &str) -> Result<&Instance, ToolError> {
        self.instances.get(id).ok_or_else(|| ToolError::UnknownInstance(id.to_string()))
    }

    pub fn table(&self, id: &str) -> Result<&TableInstance, ToolError> {
        self.get(id)?.as_table().ok_or_else(|| ToolError::WrongKind(id.to_string(), "table"))
    }

    pub fn viz(&self, id: &str) -> Result<&VisualizationInstance, ToolError> {
        self.get(id)?.as_viz().ok_or_else(|| ToolError::WrongKind(id.to_string(), "visualization"))
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableInstance> {
        self.instances.values().filter_map(Instance::as_table)
    }

    pub fn visualizations(&self) -> impl Iterator<Item = &VisualizationInstance> {
        self.instances.values().filter_map(Instance::as_viz)
    }

    pub fn visualizations_of<'a>(&'a self, table_id: &'a str) -> impl Iterator<Item = &'a VisualizationInstance> + 'a {
        self.visualizations().filter(move |v| v.source_instance_id == table_id)
    }

    /// `"{prefix}{k}"` for the smallest k >= 1 not used as a name or id.
    pub fn default_name(&self, prefix: &str) -> String {
        (1..)
            .map(|k| format!("{prefix}{k}"))
            .find(|n| !self.instances.contains_key(n) && !self.instances.values().any(|i| i.name() == n))
            .expect("unbounded range")
    }

    /// Identifier derived from a display name: non-alphanumerics become `_`,
    /// with `_2`, `_3`, ... appended on collision.
    pub fn fresh_id(&self, name: &str) -> String {
        let mut base: String = name.trim().chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
        if base.is_empty() {
            base = "Instance".into();
        }
        if !self.instances.contains_key(&base) {
            return base;
        }
        (2..).map(|k| format!("{base}_{k}")).find(|id| !self.instances.contains_key(id)).expect("unbounded range")
    }

    /// Resolves a mention: exact id first, then a unique display name.
    pub fn resolve(&self, name_or_id: &str) -> Option<&Instance> {
        if let Some(i) = self.instances.get(name_or_id) {
            return Some(i);
        }
        let mut hits = self.instances.values().filter(|i| i.name() == name_or_id || i.name().replace(' ', "_") == name_or_id);
        match (hits.next(), hits.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Version {
    pub id: u64,
    pub parent: Option<u64>,
    pub call: Option<ToolCall>,
    /// Set on every version committed by one plan.
    pub plan: Option<String>,
    pub state: Arc<WorkspaceState>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error("stale base version {base}; current is {current}")]
    StaleBase { base: u64, current: u64 },
    #[error("unknown version {0}")]
    UnknownVersion(u64),
}

/// A plan step failed; nothing was committed.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step} failed: {cause}")]
pub struct PlanFailure {
    /// Zero-based index of the failing step.
    pub step: usize,
    pub cause: ToolError,
}

#[derive(Clone, Debug)]
pub struct Applied {
    pub version_id: u64,
    pub report: Value,
    pub effects: Vec<Effect>,
    pub touched: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Workspace {
    versions: BTreeMap<u64, Version>,
    current: u64,
    next_id: u64,
    redo: Vec<u64>,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    pub fn new() -> Self {
        let root = Version { id: 0, parent: None, call: None, plan: None, state: Arc::new(WorkspaceState::default()) };
        Self { versions: BTreeMap::from([(0, root)]), current: 0, next_id: 1, redo: Vec::new() }
    }

    pub fn current_id(&self) -> u64 {
        self.current
    }

    pub fn current(&self) -> &Version {
        &self.versions[&self.current]
    }

    pub fn state(&self) -> &WorkspaceState {
        &self.current().state
    }

    pub fn version(&self, id: u64) -> Option<&Version> {
        self.versions.get(&id)
    }

    pub fn version_count(&self) -> usize {
        self.versions.len()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo.is_empty()
    }

    fn commit(&mut self, state: WorkspaceState, call: ToolCall, plan: Option<String>, id: u64) -> u64 {
        let v = Version { id, parent: Some(self.current), call: Some(call), plan, state: Arc::new(state) };
        self.versions.insert(id, v);
        self.current = id;
        self.next_id = self.next_id.max(id + 1);
        id
    }

    fn run(&self, state: &WorkspaceState, call: &ToolCall, env: &ExecEnv, version_id: u64) -> Result<crate::transform::ToolOutcome, ToolError> {
        let mut out = execute(state, call, env)?;
        for id in &out.touched {
            if let Some(inst) = out.state.instances.get_mut(id) {
                inst.lineage_mut().push(LineageRef { version_id, call_id: call.call_id.clone() });
            }
        }
        Ok(out)
    }

    /// Applies a call on top of the current version.
    pub fn apply(&mut self, call: ToolCall, env: &ExecEnv) -> Result<Applied, ToolError> {
        let id = self.next_id;
        self.apply_as(call, env, id, None)
    }

    fn apply_as(&mut self, call: ToolCall, env: &ExecEnv, id: u64, plan: Option<String>) -> Result<Applied, ToolError> {
        let out = self.run(&self.current().state, &call, env, id)?;
        self.redo.clear();
        let version_id = self.commit(out.state, call, plan, id);
        Ok(Applied { version_id, report: out.report, effects: out.effects, touched: out.touched })
    }

    /// Applies a call only if `base` is still the current version.
    pub fn apply_versioned(&mut self, base: u64, call: ToolCall, env: &ExecEnv) -> Result<Applied, WorkspaceError> {
        if base != self.current {
            return Err(WorkspaceError::StaleBase { base, current: self.current });
        }
        Ok(self.apply(call, env)?)
    }

    /// Runs every step against a scratch copy, then commits them all as
    /// consecutive versions tagged with `plan_id`. On failure nothing changes.
    pub fn execute_plan(&mut self, plan_id: &str, steps: &[ToolCall], env: &ExecEnv) -> Result<Vec<Applied>, PlanFailure> {
        let mut scratch = (*self.current().state).clone();
        let mut staged = Vec::with_capacity(steps.len());
        for (i, step) in steps.iter().enumerate() {
            let id = self.next_id + i as u64;
            let out = self.run(&scratch, step, env, id).map_err(|cause| PlanFailure { step: i, cause })?;
            scratch = out.state.clone();
            staged.push(out);
        }
        self.redo.clear();
        let mut applied = Vec::with_capacity(staged.len());
        for (step, out) in steps.iter().zip(staged) {
            let id = self.next_id;
            self.commit(out.state, step.clone(), Some(plan_id.to_string()), id);
            applied.push(Applied { version_id: id, report: out.report, effects: out.effects, touched: out.touched });
        }
        Ok(applied)
    }

    /// Steps back one version, or past a whole plan. Returns the new current
    /// version, or `None` at the root.
    pub fn undo(&mut self) -> Option<u64> {
        let tip = self.current;
        let start = self.versions[&tip].clone();
        let mut cur = start.parent?;
        if let Some(plan) = &start.plan {
            while self.versions[&cur].plan.as_ref() == Some(plan) {
                cur = self.versions[&cur].parent.expect("plan versions have parents");
            }
        }
        self.redo.push(tip);
        self.current = cur;
        Some(cur)
    }

    pub fn redo(&mut self) -> Option<u64> {
        let id = self.redo.pop()?;
        self.current = id;
        Some(id)
    }

    /// Moves the cursor to any existing version. The redo stack is dropped.
    pub fn checkout(&mut self, id: u64) -> Result<(), WorkspaceError> {
        if !self.versions.contains_key(&id) {
            return Err(WorkspaceError::UnknownVersion(id));
        }
        self.current = id;
        self.redo.clear();
        Ok(())
    }

    /// Calls from the root to `id`, oldest first.
    pub fn lineage(&self, id: u64) -> Result<Vec<LineageEntry>, WorkspaceError> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let v = self.versions.get(&c).ok_or(WorkspaceError::UnknownVersion(c))?;
            if let Some(call) = &v.call {
                out.push(LineageEntry::new(v.id, v.plan.clone(), call));
            }
            cur = v.parent;
        }
        out.reverse();
        Ok(out)
    }

    pub fn document(&self, id: u64) -> Result<VersionDocument, WorkspaceError> {
        let v = self.versions.get(&id).ok_or(WorkspaceError::UnknownVersion(id))?;
        Ok(VersionDocument::build(id, &v.state, self.lineage(id)?))
    }

    pub fn history(&self) -> WorkspaceHistory {
        let versions = self
            .versions
            .values()
            .filter_map(|v| Some(HistoryEntry { parent: v.parent?, entry: LineageEntry::new(v.id, v.plan.clone(), v.call.as_ref()?) }))
            .collect();
        WorkspaceHistory { versions, current: self.current, redo: self.redo.clone() }
    }

    /// Re-runs every recorded call on its parent's state.
    pub fn from_history(history: &WorkspaceHistory, env: &ExecEnv) -> Result<Workspace, WorkspaceError> {
        let mut ws = Workspace::new();
        for h in &history.versions {
            let id = h.entry.version_id;
            if id < ws.next_id {
                return Err(ToolError::BadArgument(format!("version {id} is out of order")).into());
            }
            let parent = ws.versions.get(&h.parent).ok_or(WorkspaceError::UnknownVersion(h.parent))?.state.clone();
            let call = h.entry.call()?;
            let out = ws.run(&parent, &call, env, id)?;
            let v = Version { id, parent: Some(h.parent), call: Some(call), plan: h.entry.plan.clone(), state: Arc::new(out.state) };
            ws.versions.insert(id, v);
            ws.next_id = id + 1;
        }
        for id in std::iter::once(&history.current).chain(&history.redo) {
            if !ws.versions.contains_key(id) {
                return Err(WorkspaceError::UnknownVersion(*id));
            }
        }
        ws.current = history.current;
        ws.redo = history.redo.clone();
        Ok(ws)
    }

    /// Rebuilds a workspace by re-running a lineage from an empty root. The
    /// recorded version ids are reused, so the result is identical.
    pub fn replay(lineage: &[LineageEntry], env: &ExecEnv) -> Result<Workspace, PlanFailure> {
        let mut ws = Workspace::new();
        for (i, entry) in lineage.iter().enumerate() {
            let call = entry.call().map_err(|cause| PlanFailure { step: i, cause })?;
            if entry.version_id < ws.next_id {
                return Err(PlanFailure { step: i, cause: ToolError::BadArgument(format!("version {} is out of order", entry.version_id)) });
            }
            ws.apply_as(call, env, entry.version_id, entry.plan.clone()).map_err(|cause| PlanFailure { step: i, cause })?;
        }
        Ok(ws)
    }
}

/// Every committed version as a call on top of its parent, plus the
/// cursor. Enough to rebuild the whole version tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceHistory {
    pub versions: Vec<HistoryEntry>,
    pub current: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub redo: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub parent: u64,
    #[serde(flatten)]
    pub entry: LineageEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub version_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    pub call_id: String,
    pub tool: String,
    pub args: Value,
}

impl LineageEntry {
    fn new(version_id: u64, plan: Option<String>, call: &ToolCall) -> Self {
        Self { version_id, plan, call_id: call.call_id.clone(), tool: call.tool.name().to_string(), args: call.tool.args() }
    }

    pub fn call(&self) -> Result<ToolCall, ToolError> {
        ToolCall::parse(self.call_id.clone(), &self.tool, self.args.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub instance_id: String,
    pub row: usize,
    pub column: String,
    pub snapshot_id: String,
    pub node_id: usize,
    pub url: String,
}

/// Export form of one version: plain cell values, the call path that built
/// it and per-cell provenance. Serialization is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VersionDocument {
    pub version_id: u64,
    pub instances: Vec<Value>,
    pub lineage: Vec<LineageEntry>,
    pub provenance: Vec<ProvenanceEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rules: BTreeMap<String, RuleObject>,
}

/// Export form of an instance. A chart whose source lost an encoded column
/// carries `missingColumns` and is shown as invalid.
fn instance_json(state: &WorkspaceState, inst: &Instance) -> Value {
    match inst {
        Instance::Table(t) => json!({
            "kind": "table",
            "id": t.id,
            "name": t.name,
            "columns": t.columns,
            "rows": t.rows.iter().map(|r| r.iter().map(|c| cell_json(&c.value)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "lineage": t.lineage,
            "derived_from": t.derived_from,
        }),
        Instance::Visualization(v) => {
            let mut out = serde_json::to_value(inst).unwrap_or_else(|_| json!({ "kind": "visualization", "id": v.id }));
            let missing = state.table(&v.source_instance_id).map(|t| v.missing_columns(t)).unwrap_or_default();
            if !missing.is_empty() {
                out["missingColumns"] = json!(missing);
            }
            out
        }
    }
}

impl VersionDocument {
    pub fn build(version_id: u64, state: &WorkspaceState, lineage: Vec<LineageEntry>) -> Self {
        let instances = state.instances.values().map(|i| instance_json(state, i)).collect();
        let mut provenance = Vec::new();
        for t in state.tables() {
            for (r, row) in t.rows.iter().enumerate() {
                for (c, cell) in row.iter().enumerate() {
                    if let Some(s) = &cell.source {
                        provenance.push(ProvenanceEntry {
                            instance_id: t.id.clone(),
                            row: r,
                            column: t.columns[c].name.clone(),
                            snapshot_id: s.snapshot_id.clone(),
                            node_id: s.node_id,
                            url: s.url.clone(),
                        });
                    }
                }
            }
        }
        Self { version_id, instances, lineage, provenance, rules: state.rules.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("documents serialize")
    }

    /// Hex sha256 of the serialized document.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
