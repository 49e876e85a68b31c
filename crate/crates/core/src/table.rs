//! Table instances: named grids of typed cells with per-cell provenance.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{CellValue, ValueType};

/// Where a captured cell came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceRef {
    pub snapshot_id: String,
    pub node_id: usize,
    pub url: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub declared_type: ValueType,
}

impl Column {
    pub fn new(name: impl Into<String>, declared_type: ValueType) -> Self {
        Self { name: name.into(), declared_type }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: CellValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
}

impl Cell {
    pub fn new(value: CellValue) -> Self {
        Self { value, source: None }
    }

    pub fn sourced(value: CellValue, source: SourceRef) -> Self {
        Self { value, source: Some(source) }
    }

    pub fn missing() -> Self {
        Self::new(CellValue::Missing)
    }
}

impl From<CellValue> for Cell {
    fn from(value: CellValue) -> Self {
        Cell::new(value)
    }
}

/// One entry of an instance's lineage: the version that touched it and the
/// tool call responsible.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageRef {
    pub version_id: u64,
    pub call_id: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("column name must not be empty")]
    EmptyColumnName,
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth { row: usize, found: usize, expected: usize },
    #[error("cell ({row}, {column:?}) holds {found}, column is {expected}")]
    CellType { row: usize, column: String, found: ValueType, expected: ValueType },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableInstance {
    pub id: String,
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    #[serde(default)]
    pub lineage: Vec<LineageRef>,
    /// Instances this table was merged from, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived_from: Vec<String>,
}

impl TableInstance {
    pub fn new(id: impl Into<String>, name: impl Into<String>, columns: Vec<Column>) -> Result<Self, SchemaError> {
        let table = Self {
            id: id.into(),
            name: name.into(),
            columns,
            rows: Vec::new(),
            lineage: Vec::new(),
            derived_from: Vec::new(),
        };
        table.validate()?;
        Ok(table)
    }

    /// Builds a table from plain values (no provenance).
    pub fn from_values(
        id: impl Into<String>,
        name: impl Into<String>,
        columns: Vec<Column>,
        rows: Vec<Vec<CellValue>>,
    ) -> Result<Self, SchemaError> {
        let mut table = Self::new(id, name, columns)?;
        table.rows = rows.into_iter().map(|r| r.into_iter().map(Cell::new).collect()).collect();
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.name.trim().is_empty() {
                return Err(SchemaError::EmptyColumnName);
            }
            if !seen.insert(c.name.as_str()) {
                return Err(SchemaError::DuplicateColumn(c.name.clone()));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(SchemaError::RowWidth { row: r, found: row.len(), expected: self.columns.len() });
            }
            for (cell, col) in row.iter().zip(&self.columns) {
                if let Some(t) = cell.value.value_type() {
                    if t != col.declared_type {
                        return Err(SchemaError::CellType {
                            row: r,
                            column: col.name.clone(),
                            found: t,
                            expected: col.declared_type,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, row: usize, col: usize) -> &CellValue {
        &self.rows[row][col].value
    }

    pub fn column_values(&self, col: usize) -> impl Iterator<Item = &CellValue> {
        self.rows.iter().map(move |r| &r[col].value)
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.column_values(col).filter(|v| v.is_missing()).count()
    }

    /// Plain value grid, handy for comparisons in tests and oracles.
    pub fn values(&self) -> Vec<Vec<CellValue>> {
        self.rows.iter().map(|r| r.iter().map(|c| c.value.clone()).collect()).collect()
    }

    pub fn push_row(&mut self, cells: Vec<Cell>) -> Result<(), SchemaError> {
        self.rows.push(cells);
        let r = self.rows.len() - 1;
        let check = Self {
            id: String::new(),
            name: String::new(),
            columns: self.columns.clone(),
            rows: vec![self.rows[r].clone()],
            lineage: Vec::new(),
            derived_from: Vec::new(),
        };
        if let Err(e) = check.validate() {
            self.rows.pop();
            return Err(match e {
                SchemaError::RowWidth { found, expected, .. } => SchemaError::RowWidth { row: r, found, expected },
                SchemaError::CellType { column, found, expected, .. } => {
                    SchemaError::CellType { row: r, column, found, expected }
                }
                other => other,
            });
        }
        Ok(())
    }

    /// Column names matching the editor's default header pattern ("Column N").
    pub fn default_named_columns(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| is_default_column_name(&c.name))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn is_default_column_name(name: &str) -> bool {
    name.strip_prefix("Column ").is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols() -> Vec<Column> {
        vec![Column::new("Name", ValueType::Text), Column::new("Price", ValueType::Number)]
    }

    #[test]
    fn rejects_duplicate_and_empty_columns() {
        let dup = vec![Column::new("a", ValueType::Text), Column::new("a", ValueType::Number)];
        assert_eq!(TableInstance::new("t", "t", dup), Err(SchemaError::DuplicateColumn("a".into())));
        assert_eq!(
            TableInstance::new("t", "t", vec![Column::new(" ", ValueType::Text)]),
            Err(SchemaError::EmptyColumnName)
        );
    }

    #[test]
    fn push_row_enforces_width_and_type() {
        let mut t = TableInstance::new("t", "t", cols()).unwrap();
        assert!(t.push_row(vec![Cell::new(CellValue::text("a"))]).is_err());
        assert!(t.push_row(vec![CellValue::text("a").into(), CellValue::text("x").into()]).is_err());
        assert!(t.push_row(vec![CellValue::text("a").into(), CellValue::Missing.into()]).is_ok());
        assert_eq!(t.row_count(), 1);
    }

    #[test]
    fn default_header_detection() {
        assert!(is_default_column_name("Column 3"));
        assert!(!is_default_column_name("Column"));
        assert!(!is_default_column_name("Columns 3"));
    }
}
