use regex::Regex;

use super::{require_column, ToolError};
use crate::table::TableInstance;
use crate::value::CellValue;

/// Replaces every non-overlapping match in text cells, either in one column
/// or across the whole table. Returns the new table and the number of
/// replacements made. Changed cells lose their provenance.
pub fn search_and_replace(
    t: &TableInstance,
    column: Option<&str>,
    pattern: &str,
    is_regex: bool,
    replacement: &str,
) -> Result<(TableInstance, usize), ToolError> {
    if pattern.is_empty() {
        return Err(ToolError::BadArgument("search pattern must not be empty".into()));
    }
    let cols: Vec<usize> = match column {
        Some(c) => vec![require_column(t, c)?],
        None => (0..t.columns.len()).collect(),
    };
    let re = if is_regex {
        Some(Regex::new(pattern).map_err(|e| ToolError::BadArgument(format!("bad regex: {e}")))?)
    } else {
        None
    };
    let mut out = t.clone();
    let mut count = 0;
    for row in &mut out.rows {
        for &c in &cols {
            let CellValue::Text(s) = &row[c].value else { continue };
            let (n, replaced) = match &re {
                Some(re) => {
                    let n = re.find_iter(s).count();
                    (n, if n > 0 { re.replace_all(s, replacement).into_owned() } else { String::new() })
                }
                None => {
                    let n = s.matches(pattern).count();
                    (n, if n > 0 { s.replace(pattern, replacement) } else { String::new() })
                }
            };
            if n > 0 {
                count += n;
                row[c].value = CellValue::Text(replaced);
                row[c].source = None;
            }
        }
    }
    Ok((out, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;
    use crate::value::ValueType;

    fn titles(vals: &[&str]) -> TableInstance {
        TableInstance::from_values(
            "t",
            "t",
            vec![Column::new("Title", ValueType::Text), Column::new("n", ValueType::Number)],
            vals.iter().map(|s| vec![CellValue::text(*s), CellValue::number(1.0)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn literal_prefix_removal() {
        let (out, n) = search_and_replace(&titles(&["Sponsored Sony A7", "Canon R5", "Sponsored Nikon Z6"]), Some("Title"), "Sponsored ", false, "").unwrap();
        assert_eq!(n, 2);
        assert_eq!(out.value(0, 0), &CellValue::text("Sony A7"));
        assert_eq!(out.value(2, 0), &CellValue::text("Nikon Z6"));
    }

    #[test]
    fn regex_without_matches_is_identity() {
        let t = titles(&["abc"]);
        let (out, n) = search_and_replace(&t, None, r"\d+", true, "#").unwrap();
        assert_eq!((out, n), (t, 0));
    }

    #[test]
    fn regex_groups_expand() {
        let (out, n) = search_and_replace(&titles(&["a1b22"]), None, r"(\d+)", true, "<$1>").unwrap();
        assert_eq!(n, 2);
        assert_eq!(out.value(0, 0), &CellValue::text("a<1>b<22>"));
    }

    #[test]
    fn bad_regex() {
        assert!(matches!(search_and_replace(&titles(&[]), None, "(", true, ""), Err(ToolError::BadArgument(_))));
    }
}
