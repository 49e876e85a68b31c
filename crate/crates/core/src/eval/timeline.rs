//! Interaction timelines: log events sorted into four categories, with
//! consecutive same-category events merged into active periods.
//!
//! An events file is a JSON array of `{"timestamp": ms, "category": ...}`
//! with categories `in-situ-guidance`, `peripheral-guidance`,
//! `chatting-with-ai` and `direct-manipulation`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::{EventKind, InteractionEvent, Modality};

pub const DEFAULT_GAP_MS: u64 = 90_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    InSituGuidance,
    PeripheralGuidance,
    ChattingWithAi,
    DirectManipulation,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::InSituGuidance, Category::PeripheralGuidance, Category::ChattingWithAi, Category::DirectManipulation];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::InSituGuidance => "in-situ-guidance",
            Category::PeripheralGuidance => "peripheral-guidance",
            Category::ChattingWithAi => "chatting-with-ai",
            Category::DirectManipulation => "direct-manipulation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub timestamp: u64,
    pub category: Category,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub category: Category,
    pub start: u64,
    pub end: u64,
    pub count: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimelineError {
    #[error("event {index} at {got} ms comes before {previous} ms")]
    Unordered { index: usize, previous: u64, got: u64 },
}

/// Merges each event into the open block when it has the block's category
/// and follows the block's last event by at most `gap_ms`.
pub fn merge_timeline(events: &[TimelineEvent], gap_ms: u64) -> Result<Vec<Block>, TimelineError> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if let Some(prev) = i.checked_sub(1).map(|p| events[p].timestamp) {
            if e.timestamp < prev {
                return Err(TimelineError::Unordered { index: i, previous: prev, got: e.timestamp });
            }
        }
        match blocks.last_mut() {
            Some(b) if b.category == e.category && e.timestamp - b.end <= gap_ms => {
                b.end = e.timestamp;
                b.count += 1;
            }
            _ => blocks.push(Block { category: e.category, start: e.timestamp, end: e.timestamp, count: 1 }),
        }
    }
    Ok(blocks)
}

/// Category of a logged event, or `None` for trivial ones (moves, view
/// switches, clock ticks). `modality` maps suggestion ids to how they were
/// offered; unknown suggestions count as peripheral.
pub fn categorize(event: &InteractionEvent, modality: &BTreeMap<String, Modality>) -> Option<Category> {
    if !event.major {
        return None;
    }
    let guidance = |id: &str| match modality.get(id) {
        Some(Modality::InSitu) => Category::InSituGuidance,
        _ => Category::PeripheralGuidance,
    };
    Some(match &event.kind {
        EventKind::SuggestionApplied { suggestion_id } | EventKind::SuggestionDismissed { suggestion_id } => guidance(suggestion_id),
        EventKind::ChatSent { .. } => Category::ChattingWithAi,
        _ => Category::DirectManipulation,
    })
}

pub fn timeline_events(log: &[InteractionEvent], modality: &BTreeMap<String, Modality>) -> Vec<TimelineEvent> {
    log.iter().filter_map(|e| categorize(e, modality).map(|category| TimelineEvent { timestamp: e.timestamp, category })).collect()
}
