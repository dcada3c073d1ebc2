use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{HdError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    Last,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            label_column: LabelColumn::Last,
        }
    }
}

/// Stable mapping between label strings and dense class ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub names: Vec<String>,
}

impl LabelMap {
    /// Sorted mapping: numerically when every label parses as a number,
    /// lexicographically otherwise.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = labels.into_iter().collect();
        let mut names: Vec<String> = set.into_iter().map(str::to_string).collect();
        let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
        if let Some(values) = numeric {
            let mut pairs: Vec<(f64, String)> = values.into_iter().zip(names).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            names = pairs.into_iter().map(|p| p.1).collect();
        }
        Self { names }
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn csv_err(line: usize, e: impl std::fmt::Display) -> HdError {
    HdError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Loads a CSV table. With `mapping`, labels are resolved through it and
/// unknown labels are rejected; otherwise a fresh sorted mapping is built.
pub fn load_csv(path: &Path, opts: &CsvOptions, mapping: Option<&LabelMap>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| {
        HdError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = if opts.has_header {
        Some(reader.headers().map_err(|e| csv_err(1, e))?.clone())
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = header.as_ref().map(|h| h.len());
    let mut label_idx: Option<usize> = None;
    let first_data_line = if opts.has_header { 2 } else { 1 };

    for (i, record) in reader.records().enumerate() {
        let line = first_data_line + i;
        let record = record.map_err(|e| csv_err(line, e))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(csv_err(
                line,
                format!("ragged row: expected {expected} fields, found {}", record.len()),
            ));
        }
        let li = match label_idx {
            Some(li) => li,
            None => {
                let li = resolve_label_column(&opts.label_column, header.as_ref(), expected)?;
                label_idx = Some(li);
                li
            }
        };
        let mut features = Vec::with_capacity(expected - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == li {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(line, format!("non-numeric feature `{cell}` in column {j}")))?;
            if !v.is_finite() {
                return Err(csv_err(line, format!("non-finite feature `{cell}` in column {j}")));
            }
            features.push(v);
        }
        rows.push(features);
        raw_labels.push(record[li].to_string());
    }

    if rows.is_empty() {
        return Err(HdError::invalid(format!("{} contains no data rows", path.display())));
    }
    if rows[0].is_empty() {
        return Err(HdError::invalid(format!("{} has no feature columns", path.display())));
    }

    let fresh;
    let map = match mapping {
        Some(m) => m,
        None => {
            fresh = LabelMap::from_labels(raw_labels.iter().map(String::as_str));
            &fresh
        }
    };
    let lookup: HashMap<&str, usize> = map
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let labels = raw_labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            lookup
                .get(l.as_str())
                .copied()
                .ok_or_else(|| csv_err(first_data_line + i, format!("unknown label `{l}`")))
        })
        .collect::<Result<Vec<_>>>()?;

    let features = Matrix::from_rows(&rows)?;
    Ok(Dataset::new(features, labels, map.names.clone())?.with_source(path.display().to_string()))
}

fn resolve_label_column(col: &LabelColumn, header: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
    match col {
        LabelColumn::Last => Ok(width - 1),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => Err(HdError::Parse {
            line: 1,
            message: format!("label column {i} out of range for {width} columns"),
        }),
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| HdError::Parse {
                line: 1,
                message: format!("label column `{name}` not found in header"),
            }),
    }
}

/// Writes `f0..f{n-1},label` with the original label strings.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HdError::Io(std::io::Error::other(e));
    let mut header: Vec<String> = (0..ds.num_features()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for (row, &l) in ds.features.iter_rows().zip(&ds.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(ds.class_names[l].clone());
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| HdError::Io(std::io::Error::other(e.to_string())))?;
    crate::hdc::write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_small_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,label\n1.0,2.0,cat\n3.5,-1,dog\n");
        let ds = load_csv(&p, &CsvOptions::default(), None).unwrap();
        assert_eq!(ds.features.rows(), 2);
        assert_eq!(ds.features.row(1), &[3.5, -1.0]);
        assert_eq!(ds.labels, vec![0, 1]);
        assert_eq!(ds.class_names, vec!["cat", "dog"]);
    }

    #[test]
    fn ragged_row_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,label\n1,2,a\n3,b\n");
        match load_csv(&p, &CsvOptions::default(), None) {
            Err(HdError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("ragged"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_feature() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,label\nabc,a\n");
        assert!(matches!(
            load_csv(&p, &CsvOptions::default(), None),
            Err(HdError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn label_column_by_name_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "cls,x,y\n2,0.5,1\n10,1.5,2\n2,0,0\n");
        let opts = CsvOptions {
            label_column: LabelColumn::Name("cls".into()),
            ..Default::default()
        };
        let ds = load_csv(&p, &opts, None).unwrap();
        assert_eq!(ds.class_names, vec!["2", "10"]);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features.row(1), &[1.5, 2.0]);

        let opts = CsvOptions {
            label_column: LabelColumn::Name("missing".into()),
            ..Default::default()
        };
        assert!(load_csv(&p, &opts, None).is_err());

        let opts = CsvOptions {
            label_column: LabelColumn::Index(0),
            has_header: false,
            delimiter: b',',
        };
        let p2 = write(&dir, "b.csv", "1,0.5\n0,0.25\n");
        let ds = load_csv(&p2, &opts, None).unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
    }

    #[test]
    fn shared_mapping_rejects_unknown_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,label\n1,a\n2,z\n");
        let map = LabelMap { names: vec!["a".into(), "b".into()] };
        assert!(load_csv(&p, &CsvOptions::default(), Some(&map)).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = load_csv(Path::new("/nonexistent/x.csv"), &CsvOptions::default(), None).unwrap_err();
        assert!(matches!(e, HdError::Io(_)));
        assert!(e.to_string().contains("/nonexistent/x.csv"));
    }
}
