//! Cached numeric layout shared by every dataset.
//!
//! `<name>.csv` holds a header row of feature names followed by `label`, then
//! one row per sample: numeric features and the integer class index. Datasets
//! distributed with a fixed test partition keep those rows in
//! `<name>.test.csv` with the same header. Columns whose name contains `=` are
//! one-hot indicators and are not standardized. UTF-8, LF line endings.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{Dataset, DatasetSpec};
use crate::error::{Error, Result};

pub(crate) fn canonical_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}.test.csv")),
    )
}

fn write_rows(ds: &Dataset, rows: std::ops::Range<usize>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut record = Vec::with_capacity(ds.n_features() + 1);
    for i in rows {
        record.clear();
        record.extend(ds.row(i).iter().map(f64::to_string));
        record.push(ds.labels()[i].to_string());
        w.write_record(&record)
            .map_err(|e| Error::malformed(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `ds` in the canonical layout under `dir`; returns the files written.
pub fn write_canonical(ds: &Dataset, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (train_path, test_path) = canonical_paths(dir, ds.name());
    match ds.standard_train_rows() {
        Some(k) => {
            write_rows(ds, 0..k, &train_path)?;
            write_rows(ds, k..ds.len(), &test_path)?;
            Ok(vec![train_path, test_path])
        }
        None => {
            write_rows(ds, 0..ds.len(), &train_path)?;
            if test_path.exists() {
                fs::remove_file(&test_path).map_err(|e| Error::io(&test_path, e))?;
            }
            Ok(vec![train_path])
        }
    }
}

struct Table {
    header: Vec<String>,
    features: Vec<f64>,
    labels: Vec<usize>,
}

fn read_table(path: &Path, n_classes: usize) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.last().map(String::as_str) != Some("label") || header.len() < 2 {
        return Err(Error::malformed(path, "last column must be `label`"));
    }
    let d = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::malformed(path, e.to_string()))?;
        if rec.len() != d + 1 {
            return Err(Error::malformed(
                path,
                format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    d + 1
                ),
            ));
        }
        for field in rec.iter().take(d) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::malformed(path, format!("row {}: `{field}` is not a number", line + 2))
            })?;
            features.push(v);
        }
        let label: usize = rec[d].trim().parse().map_err(|_| {
            Error::malformed(path, format!("row {}: bad label `{}`", line + 2, &rec[d]))
        })?;
        if label >= n_classes {
            return Err(Error::malformed(
                path,
                format!("row {}: label {label} out of range", line + 2),
            ));
        }
        labels.push(label);
    }
    Ok(Table {
        header: header[..d].to_vec(),
        features,
        labels,
    })
}

pub fn read_canonical(spec: &DatasetSpec, dir: &Path) -> Result<Dataset> {
    let (train_path, test_path) = canonical_paths(dir, spec.name);
    let n_classes = spec.class_names.len();
    let mut table = read_table(&train_path, n_classes)?;
    let mut standard_train_rows = None;
    if test_path.exists() {
        let test = read_table(&test_path, n_classes)?;
        if test.header != table.header {
            return Err(Error::malformed(
                &test_path,
                "header differs from the training file",
            ));
        }
        standard_train_rows = Some(table.labels.len());
        table.features.extend(test.features);
        table.labels.extend(test.labels);
    }
    if table.header.len() != spec.n_features {
        return Err(Error::malformed(
            &train_path,
            format!(
                "{} features, schema declares {}",
                table.header.len(),
                spec.n_features
            ),
        ));
    }
    let numeric = table.header.iter().map(|h| !h.contains('=')).collect();
    Dataset::new(
        spec.name,
        table.features,
        table.labels,
        table.header,
        spec.class_names.iter().map(|s| s.to_string()).collect(),
        numeric,
        standard_train_rows,
        format!("canonical cache {}", train_path.display()),
    )
}
