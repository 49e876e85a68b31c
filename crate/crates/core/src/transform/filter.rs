use std::cmp::Ordering;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{require_column, ToolError};
use crate::table::TableInstance;
use crate::value::{parse_boolean, parse_date, parse_number, CellValue, ValueType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    Eq,
    Neq,
    Lt,
    Lte,
    Gt,
    Gte,
    Contains,
    RegexMatch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoolOp {
    #[default]
    And,
    Or,
}

/// One predicate over a column. `operand` is a plain JSON scalar and is
/// coerced to the column's declared type when the filter is compiled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterCondition {
    pub column: String,
    pub comparator: Comparator,
    pub operand: Value,
}

impl FilterCondition {
    pub fn new(column: impl Into<String>, comparator: Comparator, operand: Value) -> Self {
        Self { column: column.into(), comparator, operand }
    }
}

enum Test {
    Cmp(Comparator, CellValue),
    Contains(String),
    Regex(Regex),
}

struct Compiled {
    col: usize,
    test: Test,
}

impl Compiled {
    fn eval(&self, v: &CellValue) -> bool {
        if v.is_missing() {
            return false;
        }
        match &self.test {
            Test::Contains(needle) => cell_text(v).is_some_and(|s| s.contains(needle.as_str())),
            Test::Regex(re) => cell_text(v).is_some_and(|s| re.is_match(s)),
            Test::Cmp(op, operand) => {
                let ord = v.compare(operand);
                match op {
                    Comparator::Eq => ord == Ordering::Equal,
                    Comparator::Neq => ord != Ordering::Equal,
                    Comparator::Lt => ord == Ordering::Less,
                    Comparator::Lte => ord != Ordering::Greater,
                    Comparator::Gt => ord == Ordering::Greater,
                    Comparator::Gte => ord != Ordering::Less,
                    Comparator::Contains | Comparator::RegexMatch => unreachable!("handled above"),
                }
            }
        }
    }
}

fn cell_text(v: &CellValue) -> Option<&str> {
    match v {
        CellValue::Text(s) | CellValue::ImageRef(s) => Some(s),
        _ => None,
    }
}

/// Coerces a JSON scalar to a cell of the given type.
pub fn coerce_operand(operand: &Value, ty: ValueType) -> Option<CellValue> {
    match (ty, operand) {
        (ValueType::Number, Value::Number(n)) => n.as_f64().map(CellValue::number),
        (ValueType::Number, Value::String(s)) => parse_number(s).map(CellValue::number),
        (ValueType::Boolean, Value::Bool(b)) => Some(CellValue::Boolean(*b)),
        (ValueType::Boolean, Value::String(s)) => parse_boolean(s).map(CellValue::Boolean),
        (ValueType::Date, Value::String(s)) => parse_date(s).map(CellValue::Date),
        (ValueType::Text, Value::String(s)) => Some(CellValue::Text(s.clone())),
        (ValueType::Text, Value::Number(n)) => Some(CellValue::Text(n.to_string())),
        (ValueType::Text, Value::Bool(b)) => Some(CellValue::Text(b.to_string())),
        (ValueType::ImageRef, Value::String(s)) => Some(CellValue::ImageRef(s.clone())),
        _ => None,
    }
}

fn compile(t: &TableInstance, c: &FilterCondition) -> Result<Compiled, ToolError> {
    let col = require_column(t, &c.column)?;
    let ty = t.columns[col].declared_type;
    let test = match c.comparator {
        Comparator::Contains | Comparator::RegexMatch => {
            if !matches!(ty, ValueType::Text | ValueType::ImageRef) {
                return Err(ToolError::TypeMismatch(format!(
                    "{:?} needs a text column, {:?} is {ty}",
                    c.comparator, c.column
                )));
            }
            let pattern = c
                .operand
                .as_str()
                .ok_or_else(|| ToolError::BadArgument("pattern operand must be a string".into()))?;
            if c.comparator == Comparator::Contains {
                Test::Contains(pattern.to_string())
            } else {
                Test::Regex(Regex::new(pattern).map_err(|e| ToolError::BadArgument(format!("bad regex: {e}")))?)
            }
        }
        op => {
            if !matches!(op, Comparator::Eq | Comparator::Neq) && !ty.is_ordered() {
                return Err(ToolError::TypeMismatch(format!("{op:?} is not defined on {ty} column {:?}", c.column)));
            }
            let operand = coerce_operand(&c.operand, ty).ok_or_else(|| {
                ToolError::TypeMismatch(format!("operand {} does not fit {ty} column {:?}", c.operand, c.column))
            })?;
            Test::Cmp(op, operand)
        }
    };
    Ok(Compiled { col, test })
}

/// Row predicate for a set of conditions; validates everything up front.
pub fn row_predicate(
    t: &TableInstance,
    conditions: &[FilterCondition],
    op: BoolOp,
) -> Result<impl Fn(&[crate::table::Cell]) -> bool, ToolError> {
    if conditions.is_empty() {
        return Err(ToolError::BadArgument("at least one filter condition is required".into()));
    }
    let compiled = conditions.iter().map(|c| compile(t, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(move |row: &[crate::table::Cell]| match op {
        BoolOp::And => compiled.iter().all(|c| c.eval(&row[c.col].value)),
        BoolOp::Or => compiled.iter().any(|c| c.eval(&row[c.col].value)),
    })
}

/// Keeps rows satisfying the combined conditions, in original order.
pub fn table_filter(t: &TableInstance, conditions: &[FilterCondition], op: BoolOp) -> Result<TableInstance, ToolError> {
    let keep = row_predicate(t, conditions, op)?;
    let mut out = t.clone();
    out.rows.retain(|r| keep(r));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;
    use serde_json::json;

    fn prices() -> TableInstance {
        TableInstance::from_values(
            "t",
            "t",
            vec![Column::new("Name", ValueType::Text), Column::new("Price", ValueType::Number)],
            [999.0, 1000.0, 1001.0]
                .iter()
                .map(|p| vec![CellValue::text(format!("cam {p}")), CellValue::number(*p)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lt_is_strict() {
        let t = prices();
        let out = table_filter(&t, &[FilterCondition::new("Price", Comparator::Lt, json!(1000))], BoolOp::And).unwrap();
        assert_eq!(out.row_count(), 1);
        assert_eq!(out.value(0, 1), &CellValue::number(999.0));
    }

    #[test]
    fn contains_empty_keeps_everything() {
        let t = prices();
        let out = table_filter(&t, &[FilterCondition::new("Name", Comparator::Contains, json!(""))], BoolOp::And).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn or_combines() {
        let t = prices();
        let conds = [
            FilterCondition::new("Price", Comparator::Lte, json!(999)),
            FilterCondition::new("Price", Comparator::Gte, json!("1,001")),
        ];
        assert_eq!(table_filter(&t, &conds, BoolOp::Or).unwrap().row_count(), 2);
        assert_eq!(table_filter(&t, &conds, BoolOp::And).unwrap().row_count(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = prices();
        assert!(matches!(table_filter(&t, &[], BoolOp::And), Err(ToolError::BadArgument(_))));
        let bad_re = FilterCondition::new("Name", Comparator::RegexMatch, json!("("));
        assert!(matches!(table_filter(&t, &[bad_re], BoolOp::And), Err(ToolError::BadArgument(_))));
        let wrong_type = FilterCondition::new("Price", Comparator::Contains, json!("9"));
        assert!(matches!(table_filter(&t, &[wrong_type], BoolOp::And), Err(ToolError::TypeMismatch(_))));
        let bad_operand = FilterCondition::new("Price", Comparator::Eq, json!("abc"));
        assert!(matches!(table_filter(&t, &[bad_operand], BoolOp::And), Err(ToolError::TypeMismatch(_))));
    }

    #[test]
    fn missing_never_matches() {
        let mut t = prices();
        t.rows[0][1].value = CellValue::Missing;
        let out = table_filter(&t, &[FilterCondition::new("Price", Comparator::Neq, json!(5))], BoolOp::And).unwrap();
        assert_eq!(out.row_count(), 2);
    }
}
