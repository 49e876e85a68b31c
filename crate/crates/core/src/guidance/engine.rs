//! The proactive loop: record events, evaluate triggers, publish ranked
//! suggestions, withdraw the ones that no longer apply.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::GuidanceConfig;
use super::events::{EventKind, InteractionEvent, View};
use super::rules::{evaluate_triggers, Binding, Firing, RuleId, Scope, TriggerContext};
use super::templates::template_plan;
use crate::llm::LlmError;
use crate::table::TableInstance;
use crate::transform::{execute, ExecEnv, ToolPlan};
use crate::workspace::{Applied, PlanFailure, Workspace, WorkspaceState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    InSitu,
    Peripheral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanSource {
    Template,
    Provider,
}

/// One changed cell of a ghost preview.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviewCell {
    pub row: usize,
    pub column: String,
    pub before: Option<String>,
    pub after: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Preview {
    pub instance_id: String,
    pub cells: Vec<PreviewCell>,
    pub rows_added: usize,
    pub rows_removed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Suggestion {
    pub id: String,
    pub scope: Scope,
    pub trigger_rule: RuleId,
    pub description: String,
    pub plan: ToolPlan,
    pub confidence: f64,
    pub base_version: u64,
    pub modality: Modality,
    pub key: String,
    pub recency: usize,
    pub source: PlanSource,
    /// Set when the plan touches instances outside the viewport; applying it
    /// needs the user's explicit permission.
    pub held: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview: Option<Preview>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invalidation {
    UserEditConflict,
    VersionAdvance,
    Viewport,
    IntentChange,
    Dismissed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Withdrawn {
    pub suggestion_id: String,
    pub cause: Invalidation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleReport {
    pub published: Vec<Suggestion>,
    pub withdrawn: Vec<Withdrawn>,
    pub macro_ran: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Focus {
    pub view: Option<View>,
    pub instance_id: Option<String>,
    pub url: Option<String>,
    pub visible: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GuidanceError {
    #[error("clock went backwards: {got} < {last}")]
    ClockRegression { last: u64, got: u64 },
    #[error("no active suggestion {0}")]
    UnknownSuggestion(String),
    #[error("suggestion was computed on version {base}, workspace is at {current}")]
    StaleSuggestion { base: u64, current: u64 },
    #[error("suggestion touches instances outside the view: {0:?}")]
    NeedsPermission(Vec<String>),
    #[error("plan failed: {0}")]
    PlanFailed(PlanFailure),
}

impl GuidanceError {
    pub fn code(&self) -> &'static str {
        match self {
            GuidanceError::ClockRegression { .. } => "clock-regression",
            GuidanceError::UnknownSuggestion(_) => "unknown-suggestion",
            GuidanceError::StaleSuggestion { .. } => "stale-suggestion",
            GuidanceError::NeedsPermission(_) => "needs-permission",
            GuidanceError::PlanFailed(_) => "plan-failed",
        }
    }
}

/// Everything a macro planner may look at.
pub struct MacroRequest<'a> {
    pub firing: &'a Firing,
    pub template: Option<&'a ToolPlan>,
    pub state: &'a WorkspaceState,
    pub env: &'a ExecEnv<'a>,
    pub focus: &'a Focus,
    /// Recent major events, already capped.
    pub events: &'a [InteractionEvent],
}

/// Source of macro plans other than the rule templates.
pub trait MacroPlanner {
    fn plan_for(&mut self, req: &MacroRequest) -> Result<ToolPlan, LlmError>;
}

/// Planner that always defers to the rule templates.
pub struct TemplatesOnly;

impl MacroPlanner for TemplatesOnly {
    fn plan_for(&mut self, _req: &MacroRequest) -> Result<ToolPlan, LlmError> {
        Err(LlmError::ProviderUnavailable("template planning only".into()))
    }
}

/// Runs a plan against a copy of `state`.
pub fn simulate(plan: &ToolPlan, state: &WorkspaceState, env: &ExecEnv) -> Result<WorkspaceState, PlanFailure> {
    let mut cur = state.clone();
    for (step, call) in plan.steps.iter().enumerate() {
        cur = execute(&cur, call, env).map_err(|cause| PlanFailure { step, cause })?.state;
    }
    Ok(cur)
}

/// Cell-level difference of one table between two states.
pub fn table_preview(before: &TableInstance, after: &TableInstance) -> Preview {
    let mut cells = Vec::new();
    for r in 0..after.row_count() {
        for (ci, col) in after.columns.iter().enumerate() {
            let new = after.value(r, ci).display_string();
            let old = before
                .column_index(&col.name)
                .filter(|_| r < before.row_count())
                .and_then(|bi| before.value(r, bi).display_string());
            if new != old {
                cells.push(PreviewCell { row: r, column: col.name.clone(), before: old, after: new });
            }
        }
    }
    Preview {
        instance_id: after.id.clone(),
        cells,
        rows_added: after.row_count().saturating_sub(before.row_count()),
        rows_removed: before.row_count().saturating_sub(after.row_count()),
    }
}

fn rank(a: &Suggestion, b: &Suggestion) -> Ordering {
    b.confidence
        .partial_cmp(&a.confidence)
        .unwrap_or(Ordering::Equal)
        .then(b.recency.cmp(&a.recency))
        .then_with(|| suggestion_number(&a.id).cmp(&suggestion_number(&b.id)))
        .then_with(|| a.id.cmp(&b.id))
}

fn suggestion_number(id: &str) -> u64 {
    id.trim_start_matches('s').parse().unwrap_or(u64::MAX)
}

#[derive(Clone, Debug)]
pub struct GuidanceEngine {
    pub config: GuidanceConfig,
    log: Vec<InteractionEvent>,
    majors: Vec<InteractionEvent>,
    focus: Focus,
    active: Vec<Suggestion>,
    resolved: BTreeSet<(RuleId, String)>,
    next_id: u64,
    clock: u64,
    last_major: u64,
    macro_done_for: Option<u64>,
}

impl Default for GuidanceEngine {
    fn default() -> Self {
        Self::new(GuidanceConfig::default())
    }
}

impl GuidanceEngine {
    pub fn new(config: GuidanceConfig) -> Self {
        Self {
            config,
            log: Vec::new(),
            majors: Vec::new(),
            focus: Focus::default(),
            active: Vec::new(),
            resolved: BTreeSet::new(),
            next_id: 1,
            clock: 0,
            last_major: 0,
            macro_done_for: None,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn focus(&self) -> &Focus {
        &self.focus
    }

    pub fn log(&self) -> &[InteractionEvent] {
        &self.log
    }

    pub fn major_events(&self) -> &[InteractionEvent] {
        &self.majors
    }

    /// The newest major events, at most `context-event-cap` of them.
    pub fn context_events(&self) -> &[InteractionEvent] {
        let cap = self.config.context_event_cap;
        &self.majors[self.majors.len().saturating_sub(cap)..]
    }

    /// Active suggestions, best first.
    pub fn active(&self) -> &[Suggestion] {
        &self.active
    }

    pub fn suggestion(&self, id: &str) -> Option<&Suggestion> {
        self.active.iter().find(|s| s.id == id)
    }

    pub fn idle_ms(&self) -> u64 {
        self.clock.saturating_sub(self.last_major)
    }

    fn tick(&mut self, now: u64) -> Result<(), GuidanceError> {
        if now < self.clock {
            return Err(GuidanceError::ClockRegression { last: self.clock, got: now });
        }
        self.clock = now;
        Ok(())
    }

    pub fn advance_clock(&mut self, now: u64) -> Result<(), GuidanceError> {
        self.tick(now)
    }

    fn withdraw(&mut self, cause: Invalidation, pred: impl Fn(&Suggestion) -> bool) -> Vec<Withdrawn> {
        let mut out = Vec::new();
        self.active.retain(|s| {
            if pred(s) {
                out.push(Withdrawn { suggestion_id: s.id.clone(), cause });
                false
            } else {
                true
            }
        });
        out
    }

    /// Records one event and returns the suggestions it invalidated.
    pub fn record_event(&mut self, event: InteractionEvent) -> Result<Vec<Withdrawn>, GuidanceError> {
        self.tick(event.timestamp)?;
        let mut withdrawn = Vec::new();
        if let EventKind::ViewChanged { view, instance_id, url, visible } = &event.kind {
            self.focus = Focus { view: Some(*view), instance_id: instance_id.clone(), url: url.clone(), visible: visible.clone() };
            if let Some(vis) = visible {
                for s in &mut self.active {
                    s.held = s.scope == Scope::Macro && !outside_view(&s.plan, vis).is_empty();
                }
            }
        }
        if event.major {
            self.last_major = event.timestamp;
            match &event.kind {
                EventKind::CellEdited { instance_id, .. }
                | EventKind::CellDeleted { instance_id, .. }
                | EventKind::ColumnNamed { instance_id, .. } => {
                    let t = instance_id.clone();
                    withdrawn.extend(self.withdraw(Invalidation::UserEditConflict, |s| {
                        s.plan.steps.iter().any(|c| c.tool.referenced_instances().contains(&t))
                    }));
                }
                EventKind::ChatSent { .. } => {
                    withdrawn.extend(self.withdraw(Invalidation::IntentChange, |s| s.modality == Modality::Peripheral));
                }
                EventKind::SuggestionDismissed { suggestion_id } => {
                    if self.dismiss(suggestion_id).is_ok() {
                        withdrawn.push(Withdrawn { suggestion_id: suggestion_id.clone(), cause: Invalidation::Dismissed });
                    }
                }
                _ => {}
            }
            self.majors.push(event.clone());
        }
        self.log.push(event);
        Ok(withdrawn)
    }

    /// Drops a suggestion and never re-offers its situation.
    pub fn dismiss(&mut self, id: &str) -> Result<Suggestion, GuidanceError> {
        let pos = self.active.iter().position(|s| s.id == id).ok_or_else(|| GuidanceError::UnknownSuggestion(id.to_string()))?;
        let s = self.active.remove(pos);
        self.resolved.insert((s.trigger_rule, s.key.clone()));
        Ok(s)
    }

    /// Withdraws every peripheral suggestion after the user states a new
    /// goal through chat.
    pub fn intent_changed(&mut self) -> Vec<Withdrawn> {
        self.withdraw(Invalidation::IntentChange, |s| s.modality == Modality::Peripheral)
    }

    pub fn firings(&self, ws: &Workspace, env: &ExecEnv) -> Vec<Firing> {
        evaluate_triggers(&TriggerContext { state: ws.state(), events: &self.majors, snapshots: env.snapshots })
    }

    fn micro_allowed(&self, binding: &Binding, env: &ExecEnv) -> bool {
        let f = &self.focus;
        let page_matches = |page: &str| match (&f.url, env.snapshots.resolve(page)) {
            (Some(u), Ok(s)) => &s.url == u || s.snapshot_id == *u,
            _ => true,
        };
        match (binding, f.view) {
            (Binding::Elements { page, .. }, Some(View::Page)) => page_matches(page),
            (Binding::Batch { page, .. }, Some(View::Page)) => page_matches(page),
            (b, Some(View::Editor)) => match (&f.instance_id, b.target()) {
                (Some(want), Some(t)) => want == t,
                _ => !matches!(b, Binding::Elements { .. }),
            },
            _ => false,
        }
    }

    fn is_known(&self, f: &Firing) -> bool {
        self.resolved.contains(&(f.rule, f.key.clone()))
            || self.active.iter().any(|s| s.trigger_rule == f.rule && s.key == f.key && s.scope == f.scope)
    }

    fn build(&mut self, f: &Firing, plan: ToolPlan, description: String, source: PlanSource, ws: &Workspace, env: &ExecEnv) -> Option<Suggestion> {
        let after = match simulate(&plan, ws.state(), env) {
            Ok(s) => s,
            Err(e) => {
                log::debug!("dropping {} suggestion: {e}", f.rule);
                return None;
            }
        };
        let target = f.binding.target().map(str::to_string);
        let preview = match (f.scope, &target) {
            (Scope::Micro, Some(t)) => match (ws.state().table(t), after.table(t)) {
                (Ok(b), Ok(a)) => Some(table_preview(b, a)),
                _ => None,
            },
            _ => None,
        };
        let held = f.scope == Scope::Macro && self.focus.visible.as_ref().is_some_and(|v| !outside_view(&plan, v).is_empty());
        let id = format!("s{}", self.next_id);
        self.next_id += 1;
        Some(Suggestion {
            id,
            scope: f.scope,
            trigger_rule: f.rule,
            description,
            plan,
            confidence: self.config.confidence_for(f.rule),
            base_version: ws.current_id(),
            modality: if f.scope == Scope::Micro { Modality::InSitu } else { Modality::Peripheral },
            key: f.key.clone(),
            recency: f.recency,
            source,
            held,
            target,
            preview,
        })
    }

    /// One evaluation cycle at time `now`.
    pub fn cycle(&mut self, ws: &Workspace, env: &ExecEnv, planner: &mut dyn MacroPlanner, now: u64) -> Result<CycleReport, GuidanceError> {
        self.tick(now)?;
        let mut report = CycleReport::default();
        let current = ws.current_id();
        report.withdrawn = self.withdraw(Invalidation::VersionAdvance, |s| s.base_version != current);

        let firings = self.firings(ws, env);
        let mut fresh = Vec::new();
        for f in firings.iter().filter(|f| f.scope == Scope::Micro) {
            if self.is_known(f) || !self.micro_allowed(&f.binding, env) {
                continue;
            }
            let Some((plan, desc)) = template_plan(f, ws.state(), self.config.ghost_rows) else { continue };
            if let Some(s) = self.build(f, plan, desc, PlanSource::Template, ws, env) {
                fresh.push(s);
            }
        }

        if self.idle_ms() >= self.config.idle_threshold_ms && self.macro_done_for != Some(self.last_major) {
            self.macro_done_for = Some(self.last_major);
            report.macro_ran = true;
            let context: Vec<InteractionEvent> = self.context_events().to_vec();
            for f in firings.iter().filter(|f| f.scope == Scope::Macro) {
                if self.is_known(f) || fresh.iter().any(|s: &Suggestion| s.trigger_rule == f.rule && s.key == f.key && s.scope == f.scope) {
                    continue;
                }
                let template = template_plan(f, ws.state(), self.config.ghost_rows);
                let req = MacroRequest {
                    firing: f,
                    template: template.as_ref().map(|(p, _)| p),
                    state: ws.state(),
                    env,
                    focus: &self.focus,
                    events: &context,
                };
                let chosen = match planner.plan_for(&req) {
                    Ok(p) if !p.is_empty() => {
                        let desc = template.as_ref().map(|(_, d)| d.clone()).unwrap_or_else(|| p.rendered_steps.join(" "));
                        Some((p, desc, PlanSource::Provider))
                    }
                    Ok(_) => template.map(|(p, d)| (p, d, PlanSource::Template)),
                    Err(e) => {
                        log::debug!("planner unavailable for {}: {e}", f.rule);
                        template.map(|(p, d)| (p, d, PlanSource::Template))
                    }
                };
                let Some((plan, desc, source)) = chosen else { continue };
                if let Some(s) = self.build(f, plan, desc, source, ws, env) {
                    fresh.push(s);
                }
            }
        }

        self.active.extend(fresh.iter().cloned());
        self.active.sort_by(rank);
        fresh.sort_by(rank);
        report.published = fresh;
        Ok(report)
    }

    /// Executes a suggestion's plan atomically. The caller records the
    /// resulting suggestion-applied event.
    pub fn apply(&mut self, ws: &mut Workspace, env: &ExecEnv, id: &str, permitted: bool) -> Result<Vec<Applied>, GuidanceError> {
        let s = self.suggestion(id).ok_or_else(|| GuidanceError::UnknownSuggestion(id.to_string()))?.clone();
        if s.base_version != ws.current_id() {
            self.active.retain(|a| a.id != id);
            return Err(GuidanceError::StaleSuggestion { base: s.base_version, current: ws.current_id() });
        }
        if s.held && !permitted {
            let vis = self.focus.visible.clone().unwrap_or_default();
            return Err(GuidanceError::NeedsPermission(outside_view(&s.plan, &vis)));
        }
        let applied = ws.execute_plan(id, &s.plan.steps, env).map_err(GuidanceError::PlanFailed)?;
        self.active.retain(|a| a.id != id);
        self.resolved.insert((s.trigger_rule, s.key));
        Ok(applied)
    }
}

/// Instances a plan references that are not on screen.
fn outside_view(plan: &ToolPlan, visible: &[String]) -> Vec<String> {
    let mut out: Vec<String> = plan
        .steps
        .iter()
        .flat_map(|c| c.tool.referenced_instances())
        .filter(|i| !visible.contains(i))
        .collect();
    out.sort();
    out.dedup();
    out
}
