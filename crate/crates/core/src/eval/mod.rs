//! Evaluation harness: benchmark tasks, scripted and model-driven virtual
//! users, replay against a live session, interaction timelines and run
//! summaries.

pub mod benchmark;
pub mod driver;
pub mod replay;
pub mod summary;
pub mod task;
pub mod timeline;

pub use benchmark::{bundled_tasks, camera_scenario, write_benchmark, CAMERA_TASK};
pub use driver::{DriverStep, ModelUser, Observation, ScriptedUser, UserMove, VirtualUser};
pub use replay::{replay_task, replay_with, write_run, GuidanceLogEntry, GuidanceType, Replay, ReplayError, ReplayOptions, Replayed, RunReport};
pub use summary::{item_credit, summarize_runs, Label, LabelFile, LabelRecord, Summary, SummaryError, SummaryRow};
pub use task::{classify, classify_difficulty, load_task, BenchmarkManifest, BenchmarkTask, Criteria, Difficulty, LoadedTask, TaskError};
pub use timeline::{categorize, merge_timeline, timeline_events, Block, Category, TimelineEvent, DEFAULT_GAP_MS};
