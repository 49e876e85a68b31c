use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ToolError;
use crate::table::TableInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionalOp {
    DeleteRows,
    DeleteCols,
    /// `indices` is `[from, to]`.
    MoveCol,
}

/// Structural edits by position. Surviving cells keep their provenance.
pub fn positional_transform(t: &TableInstance, op: PositionalOp, indices: &[usize]) -> Result<TableInstance, ToolError> {
    let mut out = t.clone();
    match op {
        PositionalOp::DeleteRows | PositionalOp::DeleteCols => {
            let bound = if op == PositionalOp::DeleteRows { t.row_count() } else { t.columns.len() };
            if let Some(bad) = indices.iter().find(|&&i| i >= bound) {
                return Err(ToolError::BadArgument(format!("index {bad} out of range 0..{bound}")));
            }
            let drop: BTreeSet<usize> = indices.iter().copied().collect();
            if op == PositionalOp::DeleteRows {
                out.rows = t.rows.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, r)| r.clone()).collect();
            } else {
                let keep = |i: &usize| !drop.contains(i);
                out.columns = (0..t.columns.len()).filter(keep).map(|i| t.columns[i].clone()).collect();
                out.rows = t.rows.iter().map(|r| (0..r.len()).filter(keep).map(|i| r[i].clone()).collect()).collect();
            }
        }
        PositionalOp::MoveCol => {
            let &[from, to] = indices else {
                return Err(ToolError::BadArgument("move-col takes [from, to]".into()));
            };
            let n = t.columns.len();
            if from >= n || to >= n {
                return Err(ToolError::BadArgument(format!("column index out of range 0..{n}")));
            }
            let c = out.columns.remove(from);
            out.columns.insert(to, c);
            for row in &mut out.rows {
                let cell = row.remove(from);
                row.insert(to, cell);
            }
        }
    }
    Ok(out)
}
