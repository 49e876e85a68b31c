//! Replays a task against a session through protocol frames, logging every
//! offered guidance with its latency and the workspace hashes around it.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::driver::{DriverStep, ModelUser, Observation, OfferedSuggestion, ScriptedUser, UserMove, VirtualUser};
use super::task::{Difficulty, LoadedTask, TaskError};
use super::timeline::{timeline_events, TimelineEvent};
use crate::extract::{css_select, PageSnapshot};
use crate::guidance::{EventKind, GuidanceConfig, InteractionEvent, Modality, RuleId, Suggestion, View};
use crate::llm::{Gateway, LiveProvider, LlmConfig, LlmError, ProviderKind, ScriptedProvider, INVALID_ACTION};
use crate::session::persist::{persist, PersistError};
use crate::session::ui::ClientMirror;
use crate::session::{
    ActionBody, ApplyBody, CaptureRequestBody, CaptureResultBody, ChatResponseBody, ChatSendBody, ErrorBody, EventBody, Frame, FrameKind,
    HelloBody, ProtocolError, Session, StateSyncBody, SuggestionPushBody, TraceRequestBody, TraceResultBody, PROTOCOL_VERSION,
};
use crate::table::TableInstance;
use crate::transform::tools::CreateInstanceArgs;
use crate::workspace::Instance;

pub const DEFAULT_STEP_BUDGET: usize = 400;
pub const DEFAULT_STEP_MS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidanceType {
    InSitu,
    Peripheral,
    Chat,
}

impl GuidanceType {
    pub const ALL: [GuidanceType; 3] = [GuidanceType::InSitu, GuidanceType::Peripheral, GuidanceType::Chat];

    pub fn as_str(self) -> &'static str {
        match self {
            GuidanceType::InSitu => "in-situ",
            GuidanceType::Peripheral => "peripheral",
            GuidanceType::Chat => "chat",
        }
    }
}

/// One piece of guidance: offered suggestions and chat replies. The
/// post-state hash is present only when the guidance was applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GuidanceLogEntry {
    pub guidance_type: GuidanceType,
    pub latency_ms: f64,
    pub description: String,
    pub pre_state_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_state_hash: Option<String>,
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub task_id: String,
    pub difficulty: Difficulty,
    pub user: String,
    pub provider: String,
    pub entries: Vec<GuidanceLogEntry>,
    pub invalid_actions: Vec<String>,
    /// Interaction log lines, with `[INVALID ACTION]` markers in place.
    pub log: Vec<String>,
    /// Wall time of each frame that ran an evaluation cycle.
    pub cycle_latencies_ms: Vec<f64>,
    pub timeline: Vec<TimelineEvent>,
    pub steps: usize,
    pub final_version: u64,
    pub final_hash: String,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("task did not finish within {budget} steps")]
    TaskTimeout { budget: usize },
    #[error("virtual user: {0}")]
    User(#[from] LlmError),
    #[error("session refused the replay: {0}")]
    Session(String),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplayOptions {
    pub step_budget: usize,
    /// Clock advance before each step.
    pub step_ms: u64,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self { step_budget: DEFAULT_STEP_BUDGET, step_ms: DEFAULT_STEP_MS }
    }
}

/// The client side of a replay: the frames it sends and what it has seen.
pub struct Replay {
    pub session: Session,
    seq: u64,
    clock: u64,
    pub mirror: ClientMirror,
    offered: BTreeMap<String, Suggestion>,
    modality: BTreeMap<String, Modality>,
    entries: Vec<GuidanceLogEntry>,
    by_suggestion: BTreeMap<String, usize>,
    log: Vec<String>,
    invalid: Vec<String>,
    cycle_latencies: Vec<f64>,
}

type Invalid = String;

fn bad_reply(e: ProtocolError) -> ErrorBody {
    ErrorBody::new(e.code(), e)
}

fn error_text(e: &ErrorBody) -> String {
    format!("{}: {}", e.code, e.message)
}

impl Replay {
    /// Greets the session; its pages must already be in its store.
    pub fn start(session: Session) -> Result<Self, ReplayError> {
        let mut r = Self {
            session,
            seq: 0,
            clock: 0,
            mirror: ClientMirror::default(),
            offered: BTreeMap::new(),
            modality: BTreeMap::new(),
            entries: Vec::new(),
            by_suggestion: BTreeMap::new(),
            log: Vec::new(),
            invalid: Vec::new(),
            cycle_latencies: Vec::new(),
        };
        r.send(FrameKind::Hello, HelloBody { protocol_version: PROTOCOL_VERSION, client: Some("replay".into()) })
            .map_err(|e| ReplayError::Session(error_text(&e)))?;
        Ok(r)
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn offered(&self) -> impl Iterator<Item = &Suggestion> {
        self.offered.values()
    }

    /// Sends one frame and folds the replies into the mirror and the
    /// guidance log. Returns the replies and the handling time.
    pub fn send(&mut self, kind: FrameKind, body: impl Serialize) -> Result<(Vec<Frame>, f64), ErrorBody> {
        self.seq += 1;
        let frame = Frame::new(kind, self.seq, body);
        let started = Instant::now();
        let replies = self.session.handle(frame);
        let ms = started.elapsed().as_secs_f64() * 1000.0;
        if matches!(kind, FrameKind::Event | FrameKind::ApplySuggestion) {
            self.cycle_latencies.push(ms);
        }
        for f in &replies {
            match f.kind {
                FrameKind::Error => return Err(f.body_as::<ErrorBody>().map_err(bad_reply)?),
                FrameKind::StateSync => {
                    let sync: StateSyncBody = f.body_as().map_err(bad_reply)?;
                    self.mirror.apply(&sync);
                }
                FrameKind::SuggestionPush => {
                    let push: SuggestionPushBody = f.body_as().map_err(bad_reply)?;
                    for w in &push.withdrawn {
                        self.offered.remove(&w.suggestion_id);
                    }
                    for s in push.published {
                        let guidance_type = match s.modality {
                            Modality::InSitu => GuidanceType::InSitu,
                            Modality::Peripheral => GuidanceType::Peripheral,
                        };
                        self.by_suggestion.insert(s.id.clone(), self.entries.len());
                        self.entries.push(GuidanceLogEntry {
                            guidance_type,
                            latency_ms: ms,
                            description: s.description.clone(),
                            pre_state_hash: self.mirror.hash.clone(),
                            post_state_hash: None,
                            applied: false,
                            suggestion_id: Some(s.id.clone()),
                            rule: Some(s.trigger_rule),
                        });
                        self.modality.insert(s.id.clone(), s.modality);
                        self.offered.insert(s.id.clone(), s);
                    }
                }
                _ => {}
            }
        }
        Ok((replies, ms))
    }

    fn event(&mut self, kind: EventKind, action: Option<(&str, Value)>) -> Result<(), Invalid> {
        let action = action.map(|(tool, args)| ActionBody { tool: tool.into(), args, call_id: None });
        let body = EventBody { event: InteractionEvent::new(self.clock, kind), action };
        self.send(FrameKind::Event, body).map(|_| ()).map_err(|e| error_text(&e))
    }

    fn page(&self, key: &str) -> Result<Arc<PageSnapshot>, Invalid> {
        self.session.store.resolve(key).cloned().map_err(|e| e.to_string())
    }

    fn node(&self, page: &str, css: &str, index: usize) -> Result<(Arc<PageSnapshot>, usize), Invalid> {
        let snap = self.page(page)?;
        let nodes = css_select(&snap.html, css, None)?;
        let node = *nodes.get(index).ok_or_else(|| format!("{css:?} matches {} elements on {page}, not {}", nodes.len(), index + 1))?;
        Ok((snap, node))
    }

    /// The strongest offered suggestion for a rule, newest first on ties.
    fn pick(&self, rule: RuleId) -> Result<String, Invalid> {
        let num = |id: &str| id.trim_start_matches('s').parse::<u64>().unwrap_or(0);
        self.offered
            .values()
            .filter(|s| s.trigger_rule == rule)
            .max_by(|a, b| a.confidence.total_cmp(&b.confidence).then(num(&a.id).cmp(&num(&b.id))))
            .map(|s| s.id.clone())
            .ok_or_else(|| format!("no {rule} suggestion is on offer"))
    }

    /// Performs one step. `Err` is the reason it could not be performed.
    pub fn step(&mut self, step: &DriverStep, step_ms: u64) -> Result<(), Invalid> {
        match step {
            DriverStep::AdvanceClock { ms } => self.clock += ms,
            _ => self.clock += step_ms,
        }
        match step {
            DriverStep::Workspace { title } => self.event(EventKind::WorkspaceCreated { title: title.clone() }, None),
            DriverStep::View { view, instance, page } => {
                let url = match page {
                    Some(p) => Some(self.page(p)?.url.clone()),
                    None => None,
                };
                self.event(EventKind::ViewChanged { view: *view, instance_id: instance.clone(), url, visible: None }, None)
            }
            DriverStep::CreateTable { id, name, columns } => {
                let t = TableInstance::new(id.as_str(), name.as_deref().unwrap_or(id), columns.clone()).map_err(|e| e.to_string())?;
                let args = serde_json::to_value(CreateInstanceArgs { instance: Instance::Table(t) }).map_err(|e| e.to_string())?;
                self.event(EventKind::TableCreated { instance_id: id.clone() }, Some(("createInstance", args)))
            }
            DriverStep::Capture { page, css, index, instance, row, column } => {
                let (snap, node) = self.node(page, css, *index)?;
                let req = CaptureRequestBody { url: snap.url.clone(), html: None, node_id: Some(node), dom_path: None };
                let (frames, _) = self.send(FrameKind::CaptureRequest, req).map_err(|e| error_text(&e))?;
                let got: CaptureResultBody = frames[0].body_as().map_err(|e| e.to_string())?;
                let args = json!({"instanceId": instance, "edits": [{"row": row, "column": column, "value": got.value, "source": got.source}]});
                let kind = EventKind::ElementCaptured { instance_id: instance.clone(), snapshot_id: got.snapshot_id, node_id: got.node_id };
                self.event(kind, Some(("updateInstance", args)))
            }
            DriverStep::Select { page, css, index } => {
                let (snap, node) = self.node(page, css, *index)?;
                let kind = EventKind::SelectionMade { instance_id: None, rows: vec![], snapshot_id: Some(snap.snapshot_id.clone()), node_id: Some(node) };
                self.event(kind, None)
            }
            DriverStep::Edit { instance, row, column, value } => {
                let t = self.session.ws.state().table(instance).map_err(|e| e.to_string())?;
                let c = t.column_index(column).ok_or_else(|| format!("{instance} has no column {column:?}"))?;
                let before = (*row < t.row_count()).then(|| t.value(*row, c).display_string()).flatten();
                let args = json!({"instanceId": instance, "edits": [{"row": row, "column": column, "value": value}]});
                let kind = match value {
                    Some(v) => EventKind::CellEdited { instance_id: instance.clone(), row: *row, column: column.clone(), before, after: Some(v.clone()) },
                    None => EventKind::CellDeleted { instance_id: instance.clone(), row: *row, column: column.clone(), before },
                };
                self.event(kind, Some(("updateInstance", args)))
            }
            DriverStep::Tool { tool, args, event } => {
                let target = args.get("instanceId").and_then(Value::as_str).map(str::to_string);
                let kind = event.clone().unwrap_or(EventKind::ViewChanged { view: View::Editor, instance_id: target, url: None, visible: None });
                self.event(kind, Some((tool.as_str(), args.clone())))
            }
            DriverStep::AdvanceClock { .. } => self.event(EventKind::ClockAdvanced, None),
            DriverStep::Apply { rule, permit } => {
                let id = self.pick(*rule)?;
                self.send(FrameKind::ApplySuggestion, ApplyBody { suggestion_id: id.clone(), permit: *permit, timestamp: Some(self.clock) })
                    .map_err(|e| error_text(&e))?;
                self.offered.remove(&id);
                if let Some(&i) = self.by_suggestion.get(&id) {
                    self.entries[i].applied = true;
                    self.entries[i].post_state_hash = Some(self.mirror.hash.clone());
                }
                Ok(())
            }
            DriverStep::Dismiss { rule } => {
                let id = self.pick(*rule)?;
                self.event(EventKind::SuggestionDismissed { suggestion_id: id.clone() }, None)?;
                self.offered.remove(&id);
                Ok(())
            }
            DriverStep::Chat { text } => {
                let pre = self.mirror.hash.clone();
                let (frames, ms) = self.send(FrameKind::ChatSend, ChatSendBody { text: text.clone(), timestamp: Some(self.clock) }).map_err(|e| error_text(&e))?;
                let resp: ChatResponseBody = frames[0].body_as().map_err(|e| e.to_string())?;
                let applied = resp.message.version.is_some();
                if let Some(e) = &resp.error {
                    self.log.push(format!("t={} assistant could not act: {}", self.clock, error_text(e)));
                }
                self.entries.push(GuidanceLogEntry {
                    guidance_type: GuidanceType::Chat,
                    latency_ms: ms,
                    description: resp.message.text.lines().next().unwrap_or_default().to_string(),
                    pre_state_hash: pre,
                    post_state_hash: applied.then(|| self.mirror.hash.clone()),
                    applied,
                    suggestion_id: None,
                    rule: None,
                });
                Ok(())
            }
            DriverStep::Trace { instance, row, column } => {
                let req = TraceRequestBody { instance_id: instance.clone(), row: *row, column: column.clone() };
                let (frames, _) = self.send(FrameKind::TraceRequest, req).map_err(|e| error_text(&e))?;
                let got: TraceResultBody = frames[0].body_as().map_err(|e| e.to_string())?;
                self.log.push(format!("t={} {instance}[{row}].{column} traced to {} node {}", self.clock, got.url, got.node_id));
                Ok(())
            }
        }
    }

    fn note_invalid(&mut self, what: &str, why: &str) {
        let line = format!("{INVALID_ACTION} t={} {what}: {why}", self.clock);
        self.log.push(line.clone());
        self.invalid.push(line);
    }

    pub fn observation<'a>(&'a self, statement: &'a str) -> Observation<'a> {
        Observation {
            statement,
            pages: self.session.store.iter().map(|p| p.url.clone()).collect(),
            instances: self.mirror.instances.values().cloned().collect(),
            suggestions: self
                .offered
                .values()
                .map(|s| OfferedSuggestion { id: s.id.clone(), rule: s.trigger_rule, description: s.description.clone(), in_situ: s.modality == Modality::InSitu })
                .collect(),
            log: &self.log,
        }
    }

    /// Runs the user to completion or until the step budget is spent.
    /// Steps that cannot be performed leave an `[INVALID ACTION]` line in
    /// the log the user sees next.
    pub fn run(&mut self, statement: &str, user: &mut dyn VirtualUser, opts: ReplayOptions) -> Result<usize, ReplayError> {
        let mut steps = 0;
        loop {
            if steps >= opts.step_budget {
                return Err(ReplayError::TaskTimeout { budget: opts.step_budget });
            }
            let m = user.next(&self.observation(statement))?;
            steps += 1;
            match m {
                UserMove::Done => return Ok(steps - 1),
                UserMove::Unreadable(why) => self.note_invalid("unreadable action", &why),
                UserMove::Step(s) => {
                    let mark = self.log.len();
                    match self.step(&s, opts.step_ms) {
                        Ok(()) => {
                            let line = format!("t={} {}", self.clock, serde_json::to_string(&s).unwrap_or_default());
                            self.log.insert(mark, line);
                        }
                        Err(why) => self.note_invalid(&serde_json::to_string(&s).unwrap_or_default(), &why),
                    }
                }
            }
        }
    }

    pub fn report(&self, task_id: &str, difficulty: Difficulty, user: &str, steps: usize) -> RunReport {
        RunReport {
            task_id: task_id.to_string(),
            difficulty,
            user: user.to_string(),
            provider: self.session.gateway.provider_name().to_string(),
            entries: self.entries.clone(),
            invalid_actions: self.invalid.clone(),
            log: self.log.clone(),
            cycle_latencies_ms: self.cycle_latencies.clone(),
            timeline: timeline_events(self.session.engine.log(), &self.modality),
            steps,
            final_version: self.session.ws.current_id(),
            final_hash: self.session.hash(),
        }
    }
}

/// A finished replay: its report and the session it left behind.
pub struct Replayed {
    pub report: RunReport,
    pub session: Session,
}

/// Replays a task with any user and gateway.
pub fn replay_with(task: &LoadedTask, user: &mut dyn VirtualUser, gateway: Gateway, opts: ReplayOptions) -> Result<Replayed, ReplayError> {
    let (store, _) = task.snapshots()?;
    let mut session = Session::new(gateway, GuidanceConfig::default());
    session.store = store;
    let mut r = Replay::start(session)?;
    let steps = r.run(&task.task.statement, user, opts)?;
    let report = r.report(&task.task.id, task.difficulty(), user.name(), steps);
    Ok(Replayed { report, session: r.session })
}

/// Replays a task offline (its driver script and fixtures) or against a
/// live endpoint, with a model as the virtual user.
pub fn replay_task(task: &LoadedTask, kind: ProviderKind, config: &LlmConfig, opts: ReplayOptions) -> Result<Replayed, ReplayError> {
    match kind {
        ProviderKind::Scripted => {
            let gateway = Gateway::new(Box::new(ScriptedProvider::new(task.task.fixtures.clone())), config.clone());
            replay_with(task, &mut ScriptedUser::new(task.task.driver.clone()), gateway, opts)
        }
        ProviderKind::Live => {
            let gateway = Gateway::new(Box::new(LiveProvider::new(config.clone())?), config.clone());
            let mut user = ModelUser::new(Box::new(LiveProvider::new(config.clone())?));
            replay_with(task, &mut user, gateway, opts)
        }
    }
}

/// Writes `<id>.report.json`, `<id>.timeline.json` and the session file
/// `<id>.session` (with its page store) into `dir`.
pub fn write_run(dir: &Path, run: &Replayed) -> Result<(), ReplayError> {
    let io = |e: std::io::Error| ReplayError::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let id = &run.report.task_id;
    let report = serde_json::to_string_pretty(&run.report).map_err(|e| ReplayError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{id}.report.json")), report).map_err(io)?;
    let timeline = serde_json::to_string_pretty(&run.report.timeline).map_err(|e| ReplayError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{id}.timeline.json")), timeline).map_err(io)?;
    persist(&run.session, &dir.join(format!("{id}.session")))?;
    Ok(())
}

/// Reads every `*.report.json` in a directory, in file name order.
pub fn load_reports(dir: &Path) -> Result<Vec<RunReport>, ReplayError> {
    let io = |e: std::io::Error| ReplayError::Io(format!("{}: {e}", dir.display()));
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".report.json")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| ReplayError::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| ReplayError::Io(format!("{}: {e}", p.display())))
        })
        .collect()
}
