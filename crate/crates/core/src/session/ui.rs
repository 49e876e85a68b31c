//! What the side panel sends and keeps, without any rendering: ghost
//! diffs in the table editor, shelf drags, canvas layout, capture-mode
//! highlights, and a client mirror patched by state-sync frames.
//!
//! Gesture to frame kind:
//!
//! | gesture                          | frame              |
//! |----------------------------------|--------------------|
//! | Tab on a ghost diff              | apply-suggestion   |
//! | Escape, or typing in a ghost cell| event (dismissed)  |
//! | apply click in the panel         | apply-suggestion   |
//! | dismiss click in the panel       | event (dismissed)  |
//! | shelf drag                       | event + action     |
//! | cell edit                        | event + action     |
//! | canvas move                      | event (minor)      |
//! | click in capture mode            | capture-request    |
//! | source badge click               | trace-request      |
//! | chat send                        | chat-send          |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::protocol::{ActionBody, ApplyBody, EventBody, FrameKind, StateSyncBody};
use crate::extract::selector::{generalize_selection, match_nodes, ElementSelection};
use crate::extract::{ExtractError, PageSnapshot, PathSeg};
use crate::guidance::{EventKind, InteractionEvent, PreviewCell, Suggestion};
use crate::viz::{Channel, VisualizationInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gesture {
    GhostTab,
    GhostEscape,
    GhostType,
    PanelApply,
    PanelDismiss,
    ShelfDrag,
    CellEdit,
    CanvasMove,
    CaptureClick,
    SourceTrace,
    ChatSend,
}

impl Gesture {
    pub const ALL: [Gesture; 11] = [
        Gesture::GhostTab,
        Gesture::GhostEscape,
        Gesture::GhostType,
        Gesture::PanelApply,
        Gesture::PanelDismiss,
        Gesture::ShelfDrag,
        Gesture::CellEdit,
        Gesture::CanvasMove,
        Gesture::CaptureClick,
        Gesture::SourceTrace,
        Gesture::ChatSend,
    ];

    pub fn frame_kind(self) -> FrameKind {
        match self {
            Gesture::GhostTab | Gesture::PanelApply => FrameKind::ApplySuggestion,
            Gesture::GhostEscape | Gesture::GhostType | Gesture::PanelDismiss | Gesture::ShelfDrag | Gesture::CellEdit | Gesture::CanvasMove => {
                FrameKind::Event
            }
            Gesture::CaptureClick => FrameKind::CaptureRequest,
            Gesture::SourceTrace => FrameKind::TraceRequest,
            Gesture::ChatSend => FrameKind::ChatSend,
        }
    }
}

/// Cells a ghost preview paints: green additions, red removals and
/// highlighted changes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GhostDiff {
    pub suggestion_id: String,
    pub target: String,
    pub added: Vec<PreviewCell>,
    pub removed: Vec<PreviewCell>,
    pub modified: Vec<PreviewCell>,
}

impl GhostDiff {
    pub fn from_suggestion(s: &Suggestion) -> Option<GhostDiff> {
        let p = s.preview.as_ref()?;
        let mut d = GhostDiff { suggestion_id: s.id.clone(), target: p.instance_id.clone(), added: vec![], removed: vec![], modified: vec![] };
        for c in &p.cells {
            match (&c.before, &c.after) {
                (None, Some(_)) => d.added.push(c.clone()),
                (Some(_), None) => d.removed.push(c.clone()),
                _ => d.modified.push(c.clone()),
            }
        }
        Some(d)
    }

    pub fn covers(&self, row: usize, column: &str) -> bool {
        self.added.iter().chain(&self.removed).chain(&self.modified).any(|c| c.row == row && c.column == column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Key {
    Tab,
    Escape,
    /// A character typed into a cell.
    Char { row: usize, column: String, ch: char },
}

/// A frame the panel would send, before sequencing.
#[derive(Clone, Debug, PartialEq)]
pub struct Outgoing {
    pub kind: FrameKind,
    pub body: Value,
}

/// The table editor's ghost state.
#[derive(Clone, Debug, Default)]
pub struct EditorView {
    pub open: Option<String>,
    pub ghost: Option<GhostDiff>,
}

impl EditorView {
    pub fn open(instance_id: &str) -> Self {
        Self { open: Some(instance_id.to_string()), ghost: None }
    }

    /// Shows an in-situ suggestion if it targets the open table.
    pub fn offer(&mut self, s: &Suggestion) -> bool {
        match GhostDiff::from_suggestion(s) {
            Some(d) if Some(&d.target) == self.open.as_ref() => {
                self.ghost = Some(d);
                true
            }
            _ => false,
        }
    }

    pub fn key(&mut self, key: Key, timestamp: u64) -> Option<Outgoing> {
        let dismiss = |id: String| Outgoing {
            kind: FrameKind::Event,
            body: json!(EventBody { event: InteractionEvent::new(timestamp, EventKind::SuggestionDismissed { suggestion_id: id }), action: None }),
        };
        match key {
            Key::Tab => {
                let g = self.ghost.take()?;
                Some(Outgoing { kind: FrameKind::ApplySuggestion, body: json!(ApplyBody { suggestion_id: g.suggestion_id, permit: false, timestamp: Some(timestamp) }) })
            }
            Key::Escape => self.ghost.take().map(|g| dismiss(g.suggestion_id)),
            Key::Char { row, column, .. } => match &self.ghost {
                Some(g) if g.covers(row, &column) => self.ghost.take().map(|g| dismiss(g.suggestion_id)),
                _ => None,
            },
        }
    }
}

/// Drops `column` on a shelf; an occupied channel is replaced.
pub fn shelf_drag(viz: &VisualizationInstance, column: &str, channel: Channel, timestamp: u64) -> Outgoing {
    let mut enc = viz.encodings.clone();
    enc.insert(channel, column.to_string());
    let body = EventBody {
        event: InteractionEvent::new(timestamp, EventKind::VizEdited { instance_id: viz.id.clone() }),
        action: Some(ActionBody { tool: "updateVisualization".into(), args: json!({"visualizationId": viz.id, "encodings": enc}), call_id: None }),
    };
    Outgoing { kind: FrameKind::Event, body: json!(body) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub z: u32,
}

/// Instance placement on the canvas, saved with the session.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanvasLayout {
    pub instances: BTreeMap<String, Rect>,
}

impl CanvasLayout {
    /// Moves an instance to the top of the stack; the event is minor.
    pub fn move_to(&mut self, id: &str, x: f64, y: f64, timestamp: u64) -> Outgoing {
        let top = self.instances.values().map(|r| r.z).max().map_or(0, |z| z + 1);
        let r = self.instances.entry(id.to_string()).or_insert(Rect { x, y, width: 320.0, height: 240.0, z: top });
        r.x = x;
        r.y = y;
        r.z = top;
        let body = EventBody { event: InteractionEvent::new(timestamp, EventKind::InstanceMoved { instance_id: id.to_string() }), action: None };
        Outgoing { kind: FrameKind::Event, body: json!(body) }
    }
}

/// Page highlights shown in capture mode once two exemplars are picked:
/// every element the generalized pattern matches, by DOM path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaptureOverlay {
    pub snapshot_id: String,
    pub highlights: Vec<Vec<PathSeg>>,
}

impl CaptureOverlay {
    pub fn for_exemplars(snapshot: &PageSnapshot, nodes: &[usize]) -> Result<Self, ExtractError> {
        let exemplars = nodes.iter().map(|&n| ElementSelection::new(snapshot, n)).collect::<Result<Vec<_>, _>>()?;
        let sel = generalize_selection(snapshot, &exemplars)?;
        let highlights = match_nodes(&snapshot.dom, &sel.path_pattern).into_iter().map(|n| snapshot.dom.dom_path(n)).collect();
        Ok(Self { snapshot_id: snapshot.snapshot_id.clone(), highlights })
    }
}

/// The panel's copy of the workspace, fed only by state-sync bodies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClientMirror {
    pub version: u64,
    pub hash: String,
    pub instances: BTreeMap<String, Value>,
}

impl ClientMirror {
    pub fn apply(&mut self, sync: &StateSyncBody) {
        if sync.full {
            self.instances.clear();
        }
        for id in &sync.removed {
            self.instances.remove(id);
        }
        for v in &sync.instances {
            if let Some(id) = v.get("id").and_then(Value::as_str) {
                self.instances.insert(id.to_string(), v.clone());
            }
        }
        self.version = sync.version;
        self.hash = sync.hash.clone();
    }

    /// Channel to column map of a chart as the panel would render it.
    pub fn encodings(&self, viz_id: &str) -> BTreeMap<String, String> {
        let Some(enc) = self.instances.get(viz_id).and_then(|v| v.get("encodings")).and_then(Value::as_object) else {
            return BTreeMap::new();
        };
        enc.iter().filter_map(|(k, v)| Some((k.clone(), v.as_str()?.to_string()))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_gesture_maps_to_one_frame_kind() {
        for g in Gesture::ALL {
            assert!(g.frame_kind().response().is_some(), "{g:?}");
        }
    }
}
