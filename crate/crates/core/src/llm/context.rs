//! The context bundle sent with every planning request.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::extract::snapshot::SnapshotStore;
use crate::guidance::{Focus, InteractionEvent, View};
use crate::viz::cell_json;
use crate::workspace::{Instance, WorkspaceState};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HtmlContext {
    pub url: String,
    pub snapshot_id: String,
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub html: Option<String>,
    /// Text digest used once the HTML budget is spent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserFocus {
    pub view: Option<View>,
    pub instance_id: Option<String>,
    pub url: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionContext {
    pub events: Vec<InteractionEvent>,
    /// One `[INVALID ACTION]` line per rejected reply in this request.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ContextBundle {
    pub html_context: Vec<HtmlContext>,
    pub instance_context: Vec<Value>,
    pub user_focus: UserFocus,
    pub conversation_history: Vec<ChatTurn>,
    pub interaction_history: InteractionContext,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContextOptions {
    pub html_budget_bytes: usize,
    pub digest_chars: usize,
    pub sample_rows: usize,
    pub event_cap: usize,
}

impl Default for ContextOptions {
    fn default() -> Self {
        Self { html_budget_bytes: 48_000, digest_chars: 1200, sample_rows: 5, event_cap: 15 }
    }
}

pub fn instance_summary(inst: &Instance, sample_rows: usize) -> Value {
    match inst {
        Instance::Table(t) => json!({
            "id": t.id,
            "name": t.name,
            "kind": "table",
            "columns": t.columns.iter().map(|c| json!({"name": c.name, "type": c.declared_type.as_str()})).collect::<Vec<_>>(),
            "rowCount": t.row_count(),
            "sampleRows": t.rows.iter().take(sample_rows).map(|r| r.iter().map(|c| cell_json(&c.value)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        Instance::Visualization(v) => json!({
            "id": v.id,
            "name": v.name,
            "kind": "visualization",
            "sourceInstanceId": v.source_instance_id,
            "chartType": v.chart_type.as_str(),
            "encodings": v.encodings.iter().map(|(ch, c)| (ch.as_str().to_string(), json!(c))).collect::<serde_json::Map<_, _>>(),
        }),
    }
}

fn digest(text: &str, limit: usize) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= limit {
        return flat;
    }
    let mut cut: String = flat.chars().take(limit).collect();
    cut.push_str(" ...");
    cut
}

/// Assembles the five context parts. Pages come newest-per-URL, the focused
/// page first; full HTML is included until the budget runs out, then pages
/// are sent as text digests.
pub fn build_context(
    state: &WorkspaceState,
    snapshots: &SnapshotStore,
    focus: &Focus,
    conversation: &[ChatTurn],
    events: &[InteractionEvent],
    opts: ContextOptions,
) -> ContextBundle {
    let mut pages: Vec<_> = snapshots.urls().into_iter().filter_map(|u| snapshots.latest_for_url(&u).cloned()).collect();
    if let Some(u) = &focus.url {
        pages.sort_by_key(|p| &p.url != u && &p.snapshot_id != u);
    }
    let mut used = 0;
    let html_context = pages
        .iter()
        .map(|p| {
            let fits = used + p.html.len() <= opts.html_budget_bytes;
            if fits {
                used += p.html.len();
            }
            HtmlContext {
                url: p.url.clone(),
                snapshot_id: p.snapshot_id.clone(),
                content_hash: p.content_hash.clone(),
                html: fits.then(|| p.html.clone()),
                digest: (!fits).then(|| digest(&p.dom.text_content(0), opts.digest_chars)),
            }
        })
        .collect();
    let majors: Vec<InteractionEvent> = events.iter().filter(|e| e.major).cloned().collect();
    let events = majors[majors.len().saturating_sub(opts.event_cap)..].to_vec();
    ContextBundle {
        html_context,
        instance_context: state.instances.values().map(|i| instance_summary(i, opts.sample_rows)).collect(),
        user_focus: UserFocus { view: focus.view, instance_id: focus.instance_id.clone(), url: focus.url.clone() },
        conversation_history: conversation.to_vec(),
        interaction_history: InteractionContext { events, markers: Vec::new() },
    }
}

/// Hash of every instance's schema plus the trigger id; the scripted
/// provider keys its fixtures on it.
pub fn fingerprint(state: &WorkspaceState, trigger: &str) -> String {
    let mut h = Sha256::new();
    for inst in state.instances.values() {
        match inst {
            Instance::Table(t) => {
                h.update(format!("T:{}:{}", t.id, t.name));
                for c in &t.columns {
                    h.update(format!("|{}:{}", c.name, c.declared_type.as_str()));
                }
            }
            Instance::Visualization(v) => {
                h.update(format!("V:{}:{}:{}:{}", v.id, v.name, v.source_instance_id, v.chart_type.as_str()));
                for (ch, c) in &v.encodings {
                    h.update(format!("|{}={}", ch.as_str(), c));
                }
            }
        }
        h.update([0u8]);
    }
    h.update(b"#");
    h.update(trigger.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::EventKind;

    #[test]
    fn budget_falls_back_to_digest_and_caps_events() {
        let mut store = SnapshotStore::new();
        let big = format!("<html><body><p>{}</p></body></html>", "word ".repeat(400));
        store.ingest(&big, "https://a.example/").unwrap();
        store.ingest("<html><body><p>small page</p></body></html>", "https://b.example/").unwrap();
        let focus = Focus { url: Some("https://b.example/".into()), ..Focus::default() };
        let events: Vec<InteractionEvent> =
            (0..40).map(|i| InteractionEvent::new(i, EventKind::ChatSent { text: format!("m{i}") })).collect();
        let opts = ContextOptions { html_budget_bytes: 200, digest_chars: 30, ..ContextOptions::default() };
        let b = build_context(&WorkspaceState::default(), &store, &focus, &[], &events, opts);
        assert_eq!(b.html_context[0].url, "https://b.example/");
        assert!(b.html_context[0].html.is_some());
        assert!(b.html_context[1].html.is_none());
        assert!(b.html_context[1].digest.as_deref().unwrap().ends_with(" ..."));
        assert_eq!(b.interaction_history.events.len(), 15);
        assert_eq!(b.interaction_history.events[0].timestamp, 25);
        let v = serde_json::to_value(&b).unwrap();
        for k in ["html-context", "instance-context", "user-focus", "conversation-history", "interaction-history"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn fingerprint_tracks_schema_and_trigger() {
        let s = WorkspaceState::default();
        assert_eq!(fingerprint(&s, "auto-viz"), fingerprint(&s, "auto-viz"));
        assert_ne!(fingerprint(&s, "auto-viz"), fingerprint(&s, "chat"));
    }
}
