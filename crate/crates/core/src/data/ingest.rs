//! CSV ingestion with column-mean imputation.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{Dataset, RbvRecord};
use crate::{Error, Result};

const LABEL_COLUMN: &str = "label";

/// Options for [`load_csv_with`]. An empty cell is always treated as
/// missing; `missing_sentinels` adds more markers such as `NA`.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub missing_sentinels: Vec<String>,
    pub schema_id: Option<String>,
}

/// Feature column names of a CSV file in header order, `label` excluded.
pub fn csv_schema(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    Ok(reader
        .headers()?
        .iter()
        .filter(|name| *name != LABEL_COLUMN)
        .map(str::to_string)
        .collect())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[String]) -> Result<Dataset> {
    load_csv_with(path, schema, &CsvOptions::default())
}

/// Reads a header-first CSV whose columns are the schema names in any
/// order, plus an optional `label` column with values 0/1. Missing cells are
/// replaced by the mean of the present values in their column.
pub fn load_csv_with(path: impl AsRef<Path>, schema: &[String], opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader.headers()?.clone();
    let mut column_of = vec![None; schema.len()];
    let mut label_col = None;
    let mut unknown = Vec::new();
    for (pos, name) in header.iter().enumerate() {
        if name == LABEL_COLUMN {
            label_col = Some(pos);
        } else if let Some(idx) = schema.iter().position(|s| s == name) {
            column_of[idx] = Some(pos);
        } else {
            unknown.push(name.to_string());
        }
    }
    let missing: Vec<String> = schema
        .iter()
        .zip(&column_of)
        .filter(|(_, c)| c.is_none())
        .map(|(s, _)| s.clone())
        .collect();
    if !missing.is_empty() || !unknown.is_empty() {
        return Err(Error::Schema { missing, unknown });
    }
    let column_of: Vec<usize> = column_of.into_iter().map(Option::unwrap).collect();

    let is_missing = |cell: &str| cell.is_empty() || opts.missing_sentinels.iter().any(|s| s == cell);

    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    let mut labels = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let mut values = Vec::with_capacity(schema.len());
        for (idx, &pos) in column_of.iter().enumerate() {
            let cell = row.get(pos).unwrap_or("");
            if is_missing(cell) {
                values.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row: line,
                        column: schema[idx].clone(),
                        value: cell.to_string(),
                    })?;
                values.push(Some(v));
            }
        }
        let label = match label_col {
            None => None,
            Some(pos) => match row.get(pos).unwrap_or("") {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => {
                    return Err(Error::Parse {
                        row: line,
                        column: LABEL_COLUMN.to_string(),
                        value: other.to_string(),
                    })
                }
            },
        };
        cells.push(values);
        labels.push(label);
    }

    let mut means = Vec::with_capacity(schema.len());
    for (idx, name) in schema.iter().enumerate() {
        let (sum, count) = cells
            .iter()
            .filter_map(|r| r[idx])
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 && !cells.is_empty() {
            return Err(Error::EmptyColumn { column: name.clone() });
        }
        means.push(if count == 0 { 0.0 } else { sum / count as f64 });
    }

    let records = cells
        .into_iter()
        .zip(labels)
        .map(|(row, label)| {
            let values = row.into_iter().zip(&means).map(|(v, &m)| v.unwrap_or(m)).collect();
            RbvRecord::new(values, label)
        })
        .collect();

    let schema_id = opts.schema_id.clone().unwrap_or_else(|| {
        if schema.len() == super::RBV_FEATURES.len() {
            super::RBV_SCHEMA_ID.to_string()
        } else {
            format!("custom{}", schema.len())
        }
    });
    Dataset::new(schema.to_vec(), records, schema_id)
}

/// Writes the dataset in the format [`load_csv`] reads. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let labeled = d.records().iter().any(|r| r.label.is_some());
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    if labeled {
        header.push(LABEL_COLUMN);
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for r in d.records() {
        let mut fields: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        if labeled {
            fields.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn file_with(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn imputes_column_mean() {
        let f = file_with("a,b\n1,5\n,6\n3,\n");
        let d = load_csv(f.path(), &names(&["a", "b"])).unwrap();
        assert_eq!(d.column(0), vec![1.0, 2.0, 3.0]);
        assert_eq!(d.column(1), vec![5.0, 6.0, 5.5]);
    }

    #[test]
    fn extra_sentinel_counts_as_missing() {
        let f = file_with("a\n1\nNA\n3\n");
        let opts = CsvOptions {
            missing_sentinels: vec!["NA".into()],
            ..Default::default()
        };
        let d = load_csv_with(f.path(), &names(&["a"]), &opts).unwrap();
        assert_eq!(d.column(0), vec![1.0, 2.0, 3.0]);
        let err = load_csv(f.path(), &names(&["a"])).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn reorders_columns_to_schema() {
        let f = file_with("b,label,a\n2,1,1\n4,0,3\n");
        let d = load_csv(f.path(), &names(&["a", "b"])).unwrap();
        assert_eq!(d.records()[0].values, vec![1.0, 2.0]);
        assert_eq!(d.records()[1].label, Some(0));
        assert_eq!(csv_schema(f.path()).unwrap(), names(&["b", "a"]));
    }

    #[test]
    fn schema_error_names_offenders() {
        let schema = crate::data::rbv_schema();
        let header: Vec<String> = schema.iter().filter(|s| *s != "LDL").cloned().collect();
        let f = file_with(&format!("{},extra\n", header.join(",")));
        let err = load_csv(f.path(), &schema).unwrap_err();
        match err {
            Error::Schema { missing, unknown } => {
                assert_eq!(missing, vec!["LDL".to_string()]);
                assert_eq!(unknown, vec!["extra".to_string()]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_column_is_an_error() {
        let f = file_with("a,b\n1,\n2,\n");
        let err = load_csv(f.path(), &names(&["a", "b"])).unwrap_err();
        assert!(matches!(err, Error::EmptyColumn { ref column } if column == "b"));
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let f = file_with("a,b\n1,2\n3,x\n");
        let err = load_csv(f.path(), &names(&["a", "b"])).unwrap_err();
        match err {
            Error::Parse { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (3, "b", "x"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn label_counts_match_text() {
        let text = "a,label\n0.1,1\n0.2,1\n0.3,0\n0.4,0\n";
        let f = file_with(text);
        let d = load_csv(f.path(), &names(&["a"])).unwrap();
        // independent count straight from the text
        let ones = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
        let zeros = text.lines().skip(1).filter(|l| l.ends_with(",0")).count();
        assert_eq!(d.len(), 4);
        assert_eq!(d.class_counts(), [zeros, ones]);
    }

    #[test]
    fn write_then_load_is_bit_identical() {
        let d = Dataset::from_rows(
            vec![vec![0.1, -1e-300, 123456.789], vec![1.0 / 3.0, 2.5, -0.0]],
            vec![1, 0],
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, f.path()).unwrap();
        let back = load_csv(f.path(), d.feature_names()).unwrap();
        for (a, b) in d.records().iter().zip(back.records()) {
            let bits_a: Vec<u64> = a.values.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.values.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
            assert_eq!(a.label, b.label);
        }
    }
}
