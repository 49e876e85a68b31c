//! Engine for a mixed-initiative web-data workbench: page capture and
//! extraction, table transforms, versioned workspaces, proactive guidance,
//! the chat gateway, the session protocol and the evaluation harness.

pub mod eval;
pub mod extract;
pub mod guidance;
pub mod llm;
pub mod pattern;
pub mod session;
pub mod table;
pub mod transform;
pub mod value;
pub mod viz;
pub mod workspace;

pub use table::{Cell, Column, SourceRef, TableInstance};
pub use transform::{Tool, ToolCall, ToolError, ToolPlan};
pub use value::{CellValue, ValueType};
pub use viz::{ChartType, VisualizationInstance};
pub use workspace::{Instance, Workspace, WorkspaceState};
