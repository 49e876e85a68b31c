#![allow(dead_code)]

pub mod fill_corpus;
pub mod fill_oracle;
pub mod scripts;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde_json::{json, Value};
use workbench_core::extract::pagegen::{generate_list_page, SiteStyle};
use workbench_core::extract::snapshot::{PageSnapshot, SnapshotStore};
use workbench_core::extract::{capture_element, dom::css_select};
use workbench_core::guidance::{fired_rules, EventKind, InteractionEvent, RuleId, TriggerContext};
use workbench_core::transform::tools::CreateInstanceArgs;
use workbench_core::transform::ExecEnv;
use workbench_core::{CellValue, Column, Instance, TableInstance, Tool, ToolCall, ValueType, Workspace};

/// A workspace driven by tool calls plus the events a UI would report.
pub struct Script {
    pub store: SnapshotStore,
    pub ws: Workspace,
    pub events: Vec<InteractionEvent>,
    pub t: u64,
    calls: usize,
}

impl Default for Script {
    fn default() -> Self {
        Self::new()
    }
}

impl Script {
    pub fn new() -> Self {
        Self { store: SnapshotStore::new(), ws: Workspace::new(), events: Vec::new(), t: 1000, calls: 0 }
    }

    pub fn page(&mut self, seed: u64, n: usize, style: SiteStyle, url: &str) -> Arc<PageSnapshot> {
        let p = generate_list_page(seed, n, style, url, false);
        self.store.ingest(&p.html, url).unwrap()
    }

    pub fn page_from_html(&mut self, html: &str, url: &str) -> Arc<PageSnapshot> {
        self.store.ingest(html, url).unwrap()
    }

    pub fn select(&self, snap: &PageSnapshot, css: &str) -> Vec<usize> {
        css_select(&snap.html, css, None).unwrap()
    }

    pub fn call(&mut self, tool: &str, args: Value) -> Value {
        self.calls += 1;
        let call = ToolCall::parse(format!("u{}", self.calls), tool, args).unwrap();
        let env = ExecEnv { snapshots: &self.store };
        self.ws.apply(call, &env).unwrap_or_else(|e| panic!("{tool} failed: {e}")).report
    }

    pub fn table(&mut self, id: &str, columns: &[(&str, ValueType)], rows: Vec<Vec<CellValue>>) {
        let cols = columns.iter().map(|(n, t)| Column::new(*n, *t)).collect();
        let t = TableInstance::from_values(id, id, cols, rows).unwrap();
        self.calls += 1;
        let call = ToolCall::new(format!("u{}", self.calls), Tool::CreateInstance(CreateInstanceArgs { instance: Instance::Table(t) }));
        let env = ExecEnv { snapshots: &self.store };
        self.ws.apply(call, &env).unwrap();
    }

    pub fn event(&mut self, kind: EventKind) {
        self.t += 250;
        self.events.push(InteractionEvent::new(self.t, kind));
    }

    fn cell_text(&self, table: &str, row: usize, column: &str) -> Option<String> {
        let t = self.ws.state().table(table).ok()?;
        let c = t.column_index(column)?;
        (row < t.row_count()).then(|| t.value(row, c).display_string()).flatten()
    }

    /// A manual cell edit; `None` clears the cell.
    pub fn edit(&mut self, table: &str, row: usize, column: &str, after: Option<&str>) {
        let before = self.cell_text(table, row, column);
        let value = after.map_or(Value::Null, |a| json!(a));
        self.call("updateInstance", json!({"instanceId": table, "edits": [{"row": row, "column": column, "value": value}]}));
        let kind = match after {
            Some(a) => EventKind::CellEdited { instance_id: table.into(), row, column: column.into(), before, after: Some(a.into()) },
            None => EventKind::CellDeleted { instance_id: table.into(), row, column: column.into(), before },
        };
        self.event(kind);
    }

    /// Drags a page element into a table cell.
    pub fn capture(&mut self, table: &str, row: usize, column: &str, snap: &PageSnapshot, node: usize) {
        let (value, source) = capture_element(snap, node).unwrap();
        let v = match &value {
            CellValue::Text(s) => json!(s),
            other => serde_json::to_value(other).unwrap(),
        };
        self.call(
            "updateInstance",
            json!({"instanceId": table, "edits": [{"row": row, "column": column, "value": v, "source": source}]}),
        );
        self.event(EventKind::ElementCaptured { instance_id: table.into(), snapshot_id: snap.snapshot_id.clone(), node_id: node });
    }

    pub fn fired(&self) -> BTreeSet<RuleId> {
        fired_rules(&TriggerContext { state: self.ws.state(), events: &self.events, snapshots: &self.store })
    }
}

pub fn text(s: &str) -> CellValue {
    CellValue::text(s)
}

pub fn num(n: f64) -> CellValue {
    CellValue::number(n)
}
