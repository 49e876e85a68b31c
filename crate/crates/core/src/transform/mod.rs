//! Table transforms and the tool catalog that exposes them.
//!
//! Every operation is a pure function from a table (or workspace state) to a
//! new one; nothing here mutates in place.

pub mod aggregate;
pub mod convert;
pub mod exec;
pub mod fill;
pub mod filter;
pub mod format;
pub mod formula;
pub mod merge;
pub mod positional;
pub mod replace;
pub mod reshape;
pub mod sort;
pub mod tools;

use thiserror::Error;

use crate::extract::ExtractError;
use crate::table::{SchemaError, TableInstance};

pub use exec::{execute, Effect, ExecEnv, ToolOutcome};
pub use tools::{Tool, ToolCall, ToolPlan, CATALOG};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolError {
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("join key types differ: {left} vs {right}")]
    JoinTypeMismatch { left: String, right: String },
    #[error("formula: {0}")]
    FormulaParse(String),
    #[error("column {0:?} has no values to fill from")]
    NoNonMissingValues(String),
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("instance {0:?} already exists")]
    DuplicateId(String),
    #[error("instance {0:?} is not a {1}")]
    WrongKind(String, &'static str),
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("extraction: {0}")]
    Extraction(#[from] ExtractError),
}

impl From<SchemaError> for ToolError {
    fn from(e: SchemaError) -> Self {
        ToolError::Schema(e.to_string())
    }
}

impl ToolError {
    /// Stable kebab-case code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            ToolError::UnknownTool(_) => "unknown-tool",
            ToolError::BadArgument(_) => "bad-argument",
            ToolError::UnknownColumn(_) => "unknown-column",
            ToolError::TypeMismatch(_) => "type-mismatch",
            ToolError::JoinTypeMismatch { .. } => "join-type-mismatch",
            ToolError::FormulaParse(_) => "formula-parse",
            ToolError::NoNonMissingValues(_) => "no-non-missing-values",
            ToolError::UnknownInstance(_) => "unknown-instance",
            ToolError::DuplicateId(_) => "duplicate-id",
            ToolError::WrongKind(..) => "wrong-kind",
            ToolError::UnknownRule(_) => "unknown-rule",
            ToolError::Schema(_) => "schema",
            ToolError::Extraction(ExtractError::SourceGone) => "source-gone",
            ToolError::Extraction(ExtractError::NoCommonPattern(_)) => "no-common-pattern",
            ToolError::Extraction(_) => "extraction",
        }
    }
}

pub(crate) fn require_column(t: &TableInstance, name: &str) -> Result<usize, ToolError> {
    t.column_index(name).ok_or_else(|| ToolError::UnknownColumn(name.to_string()))
}
