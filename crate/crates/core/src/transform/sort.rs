use serde::{Deserialize, Serialize};

use super::{require_column, ToolError};
use crate::table::TableInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Asc,
    Desc,
}

/// Stable sort by one column. Missing values go last under both orders.
pub fn table_sort(t: &TableInstance, column: &str, order: SortOrder) -> Result<TableInstance, ToolError> {
    let col = require_column(t, column)?;
    let mut out = t.clone();
    out.rows.sort_by(|a, b| {
        let (va, vb) = (&a[col].value, &b[col].value);
        match (va.is_missing(), vb.is_missing()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            (false, false) => match order {
                SortOrder::Asc => va.compare(vb),
                SortOrder::Desc => vb.compare(va),
            },
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;
    use crate::value::{CellValue, ValueType};

    fn nums(vals: &[Option<f64>]) -> TableInstance {
        TableInstance::from_values(
            "t",
            "t",
            vec![Column::new("n", ValueType::Number), Column::new("tag", ValueType::Number)],
            vals.iter()
                .enumerate()
                .map(|(i, v)| {
                    vec![v.map(CellValue::number).unwrap_or(CellValue::Missing), CellValue::number(i as f64)]
                })
                .collect(),
        )
        .unwrap()
    }

    fn col0(t: &TableInstance) -> Vec<Option<f64>> {
        t.column_values(0).map(CellValue::as_number).collect()
    }

    #[test]
    fn missing_sorts_last_in_both_orders() {
        let t = nums(&[Some(3.0), None, Some(1.0)]);
        assert_eq!(col0(&table_sort(&t, "n", SortOrder::Asc).unwrap()), vec![Some(1.0), Some(3.0), None]);
        assert_eq!(col0(&table_sort(&t, "n", SortOrder::Desc).unwrap()), vec![Some(3.0), Some(1.0), None]);
    }

    #[test]
    fn already_sorted_is_identity() {
        let t = nums(&[Some(1.0), Some(2.0), Some(2.0), Some(5.0)]);
        assert_eq!(table_sort(&t, "n", SortOrder::Asc).unwrap(), t);
    }

    #[test]
    fn ties_keep_original_order() {
        let t = nums(&[Some(2.0), Some(1.0), Some(2.0), Some(1.0)]);
        let s = table_sort(&t, "n", SortOrder::Desc).unwrap();
        let tags: Vec<f64> = s.column_values(1).filter_map(CellValue::as_number).collect();
        assert_eq!(tags, vec![0.0, 2.0, 1.0, 3.0]);
    }

    #[test]
    fn unknown_column() {
        let t = nums(&[Some(1.0)]);
        assert!(matches!(table_sort(&t, "zzz", SortOrder::Asc), Err(ToolError::UnknownColumn(_))));
    }
}
