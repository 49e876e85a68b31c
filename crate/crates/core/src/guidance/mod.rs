//! Proactive guidance: interaction events in, ranked suggestions out.

pub mod config;
pub mod engine;
pub mod events;
pub mod rules;
pub mod templates;

pub use config::GuidanceConfig;
pub use engine::{
    simulate, table_preview, CycleReport, Focus, GuidanceEngine, GuidanceError, Invalidation, MacroPlanner, MacroRequest, Modality,
    PlanSource, Preview, PreviewCell, Suggestion, TemplatesOnly, Withdrawn,
};
pub use events::{EventKind, InteractionEvent, View};
pub use rules::{evaluate_triggers, fired_rules, Binding, Firing, RuleId, Scope, TriggerContext};
pub use templates::template_plan;
