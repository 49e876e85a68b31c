//! Interaction events reported by the UI or a replay driver.

use serde::{Deserialize, Serialize};

use crate::transform::filter::{BoolOp, FilterCondition};
use crate::transform::sort::SortOrder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum View {
    /// The table or chart editor.
    Editor,
    Canvas,
    /// The web page, in capture mode.
    Page,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    WorkspaceCreated {
        title: String,
    },
    /// A page element was dragged into a table cell.
    #[serde(rename_all = "camelCase")]
    ElementCaptured {
        instance_id: String,
        snapshot_id: String,
        node_id: usize,
    },
    /// `before`/`after` are display strings; `None` is an empty cell.
    #[serde(rename_all = "camelCase")]
    CellEdited {
        instance_id: String,
        row: usize,
        column: String,
        before: Option<String>,
        after: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    CellDeleted {
        instance_id: String,
        row: usize,
        column: String,
        before: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    ColumnNamed {
        instance_id: String,
        column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        previous: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    SortApplied {
        instance_id: String,
        column: String,
        order: SortOrder,
    },
    #[serde(rename_all = "camelCase")]
    FilterApplied {
        instance_id: String,
        conditions: Vec<FilterCondition>,
        #[serde(default)]
        operator: BoolOp,
    },
    #[serde(rename_all = "camelCase")]
    TableCreated {
        instance_id: String,
    },
    #[serde(rename_all = "camelCase")]
    VizCreated {
        instance_id: String,
    },
    #[serde(rename_all = "camelCase")]
    VizEdited {
        instance_id: String,
    },
    /// A selection on a page (snapshot and node) or in a table (instance,
    /// optionally a row subset; no rows means the whole artifact).
    #[serde(rename_all = "camelCase")]
    SelectionMade {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance_id: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        rows: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node_id: Option<usize>,
    },
    ChatSent {
        text: String,
    },
    #[serde(rename_all = "camelCase")]
    SuggestionApplied {
        suggestion_id: String,
    },
    #[serde(rename_all = "camelCase")]
    SuggestionDismissed {
        suggestion_id: String,
    },
    #[serde(rename_all = "camelCase")]
    InstanceMoved {
        instance_id: String,
    },
    #[serde(rename_all = "camelCase")]
    ViewChanged {
        view: View,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        url: Option<String>,
        /// Instances currently on screen; `None` when the UI does not say.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        visible: Option<Vec<String>>,
    },
    /// Simulated time passing, used by replay drivers to open the idle gate.
    ClockAdvanced,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::WorkspaceCreated { .. } => "workspace-created",
            EventKind::ElementCaptured { .. } => "element-captured",
            EventKind::CellEdited { .. } => "cell-edited",
            EventKind::CellDeleted { .. } => "cell-deleted",
            EventKind::ColumnNamed { .. } => "column-named",
            EventKind::SortApplied { .. } => "sort-applied",
            EventKind::FilterApplied { .. } => "filter-applied",
            EventKind::TableCreated { .. } => "table-created",
            EventKind::VizCreated { .. } => "viz-created",
            EventKind::VizEdited { .. } => "viz-edited",
            EventKind::SelectionMade { .. } => "selection-made",
            EventKind::ChatSent { .. } => "chat-sent",
            EventKind::SuggestionApplied { .. } => "suggestion-applied",
            EventKind::SuggestionDismissed { .. } => "suggestion-dismissed",
            EventKind::InstanceMoved { .. } => "instance-moved",
            EventKind::ViewChanged { .. } => "view-changed",
            EventKind::ClockAdvanced => "clock-advanced",
        }
    }

    /// Moves, view switches and clock ticks are minor; everything else is
    /// a major interaction.
    pub fn default_major(&self) -> bool {
        !matches!(self, EventKind::InstanceMoved { .. } | EventKind::ViewChanged { .. } | EventKind::ClockAdvanced)
    }

    /// The table or chart the event is about, if any.
    pub fn instance(&self) -> Option<&str> {
        match self {
            EventKind::ElementCaptured { instance_id, .. }
            | EventKind::CellEdited { instance_id, .. }
            | EventKind::CellDeleted { instance_id, .. }
            | EventKind::ColumnNamed { instance_id, .. }
            | EventKind::SortApplied { instance_id, .. }
            | EventKind::FilterApplied { instance_id, .. }
            | EventKind::TableCreated { instance_id }
            | EventKind::VizCreated { instance_id }
            | EventKind::VizEdited { instance_id }
            | EventKind::InstanceMoved { instance_id } => Some(instance_id),
            EventKind::SelectionMade { instance_id, .. } | EventKind::ViewChanged { instance_id, .. } => instance_id.as_deref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawEvent")]
pub struct InteractionEvent {
    /// Milliseconds on the session clock.
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub major: bool,
}

#[derive(Deserialize)]
struct RawEvent {
    timestamp: u64,
    #[serde(flatten)]
    kind: EventKind,
    #[serde(default)]
    major: Option<bool>,
}

impl From<RawEvent> for InteractionEvent {
    fn from(r: RawEvent) -> Self {
        let major = r.major.unwrap_or_else(|| r.kind.default_major());
        Self { timestamp: r.timestamp, kind: r.kind, major }
    }
}

impl InteractionEvent {
    pub fn new(timestamp: u64, kind: EventKind) -> Self {
        let major = kind.default_major();
        Self { timestamp, kind, major }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn wire_form_and_major_default() {
        let e: InteractionEvent = serde_json::from_value(json!({
            "timestamp": 10, "kind": "cell-edited", "instanceId": "T", "row": 0, "column": "a", "before": null, "after": "x"
        }))
        .unwrap();
        assert!(e.major);
        let m: InteractionEvent = serde_json::from_value(json!({"timestamp": 11, "kind": "instance-moved", "instanceId": "T"})).unwrap();
        assert!(!m.major);
        let back = serde_json::to_value(&e).unwrap();
        assert_eq!(back["kind"], "cell-edited");
        assert_eq!(back["major"], true);
        let again: InteractionEvent = serde_json::from_value(back).unwrap();
        assert_eq!(again, e);
    }
}
