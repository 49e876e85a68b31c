//! Union and key joins over table instances.
//!
//! Output row order for joins: left rows in order, each followed by its
//! matches in right-table order. Right joins then append unmatched right rows
//! in right-table order. Missing keys never match.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::{Cell, Column, TableInstance};
use crate::value::CellValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeStrategy {
    Union,
    Inner,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeOptions {
    /// Trim and case-fold text keys before comparing.
    pub fold_text_keys: bool,
}

/// Merges two or more tables. `join_columns` names one key column per table
/// and is ignored for unions. The result keeps the first table's id and name;
/// callers assign the output identity.
pub fn merge_instances(
    tables: &[&TableInstance],
    strategy: MergeStrategy,
    join_columns: &[String],
    options: MergeOptions,
) -> Result<TableInstance, ToolError> {
    if tables.len() < 2 {
        return Err(ToolError::BadArgument("merge needs at least two tables".into()));
    }
    match strategy {
        MergeStrategy::Union => union(tables),
        _ => {
            if join_columns.len() != tables.len() {
                return Err(ToolError::BadArgument(format!(
                    "expected {} join columns, got {}",
                    tables.len(),
                    join_columns.len()
                )));
            }
            let mut acc = tables[0].clone();
            let mut acc_key = join_columns[0].clone();
            for (t, key) in tables[1..].iter().zip(&join_columns[1..]) {
                acc = join(&acc, &acc_key, t, key, strategy, options)?;
                acc_key = join_columns[0].clone();
            }
            Ok(acc)
        }
    }
}

fn union(tables: &[&TableInstance]) -> Result<TableInstance, ToolError> {
    let mut columns: Vec<Column> = Vec::new();
    for t in tables {
        for c in &t.columns {
            match columns.iter().find(|o| o.name == c.name) {
                Some(existing) if existing.declared_type != c.declared_type => {
                    return Err(ToolError::TypeMismatch(format!(
                        "column {:?} is {} in one table and {} in another",
                        c.name, existing.declared_type, c.declared_type
                    )))
                }
                Some(_) => {}
                None => columns.push(c.clone()),
            }
        }
    }
    let mut out = tables[0].clone();
    out.columns = columns;
    out.rows = Vec::new();
    for t in tables {
        let map: Vec<Option<usize>> = out.columns.iter().map(|c| t.column_index(&c.name)).collect();
        for row in &t.rows {
            out.rows.push(map.iter().map(|m| m.map(|i| row[i].clone()).unwrap_or_else(Cell::missing)).collect());
        }
    }
    Ok(out)
}

fn key_of(v: &CellValue, fold: bool) -> Option<String> {
    match v {
        CellValue::Missing => None,
        CellValue::Text(s) if fold => Some(format!("text:{}", s.trim().to_lowercase())),
        other => Some(other.group_key()),
    }
}

fn join(
    left: &TableInstance,
    left_key: &str,
    right: &TableInstance,
    right_key: &str,
    strategy: MergeStrategy,
    options: MergeOptions,
) -> Result<TableInstance, ToolError> {
    let lk = require_column(left, left_key)?;
    let rk = require_column(right, right_key)?;
    let (lt, rt) = (left.columns[lk].declared_type, right.columns[rk].declared_type);
    if lt != rt {
        return Err(ToolError::JoinTypeMismatch {
            left: format!("{}.{left_key} ({lt})", left.name),
            right: format!("{}.{right_key} ({rt})", right.name),
        });
    }

    // Output schema: every left column, then right columns except the key.
    let right_cols: Vec<usize> = (0..right.columns.len()).filter(|&i| i != rk).collect();
    let mut left_names: Vec<String> = left.columns.iter().map(|c| c.name.clone()).collect();
    let mut right_names: Vec<String> = right_cols.iter().map(|&i| right.columns[i].name.clone()).collect();
    for (ri, rname) in right_names.iter_mut().enumerate() {
        if let Some(li) = left_names.iter().position(|n| n == rname) {
            if li != lk {
                left_names[li] = format!("{}.{}", left.name, left_names[li]);
            }
            *rname = format!("{}.{}", right.name, right.columns[right_cols[ri]].name);
        }
    }
    let mut columns: Vec<Column> = left
        .columns
        .iter()
        .zip(&left_names)
        .map(|(c, n)| Column::new(n.clone(), c.declared_type))
        .collect();
    columns.extend(right_cols.iter().zip(&right_names).map(|(&i, n)| Column::new(n.clone(), right.columns[i].declared_type)));

    let mut index: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, row) in right.rows.iter().enumerate() {
        if let Some(k) = key_of(&row[rk].value, options.fold_text_keys) {
            index.entry(k).or_default().push(i);
        }
    }

    let right_part = |row: Option<&Vec<Cell>>| -> Vec<Cell> {
        right_cols.iter().map(|&i| row.map(|r| r[i].clone()).unwrap_or_else(Cell::missing)).collect()
    };

    let mut rows = Vec::new();
    let mut matched_right = vec![false; right.rows.len()];
    for lrow in &left.rows {
        let matches = key_of(&lrow[lk].value, options.fold_text_keys)
            .and_then(|k| index.get(&k))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for &ri in matches {
            matched_right[ri] = true;
            let mut row = lrow.clone();
            row.extend(right_part(Some(&right.rows[ri])));
            rows.push(row);
        }
        if matches.is_empty() && strategy == MergeStrategy::Left {
            let mut row = lrow.clone();
            row.extend(right_part(None));
            rows.push(row);
        }
    }
    if strategy == MergeStrategy::Right {
        for (ri, rrow) in right.rows.iter().enumerate().filter(|(i, _)| !matched_right[*i]) {
            let mut row: Vec<Cell> = (0..left.columns.len())
                .map(|i| if i == lk { rrow[rk].clone() } else { Cell::missing() })
                .collect();
            row.extend(right_part(Some(&right.rows[ri])));
            rows.push(row);
        }
    }

    let mut out = left.clone();
    out.columns = columns;
    out.rows = rows;
    Ok(out)
}
