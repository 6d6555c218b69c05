//! CSV matrices, sorted-key JSON, and all-or-nothing output directories.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a numeric CSV matrix, skipping one header row if `header`.
pub fn read_matrix(path: &Path, header: bool) -> CliResult<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::parse(path, format!("{other:?}")),
        })?;
    let mut data = Vec::new();
    let mut cols = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(path, e))?;
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(CliError::parse(
                    path,
                    format!("row {} has {} fields, expected {c}", i + 1, rec.len()),
                ))
            }
            _ => {}
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::parse(path, format!("row {}, column {}: not a number: {field:?}", i + 1, j + 1)))?;
            data.push(v);
        }
    }
    let cols = cols.ok_or_else(|| CliError::parse(path, "no data rows"))?;
    let rows = data.len() / cols;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| CliError::parse(path, e))
}

/// A matrix as CSV text, no header.
pub fn matrix_csv(m: ArrayView2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// A table with a header row; cells are already formatted.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

pub fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Pretty JSON with object keys sorted.
pub fn sorted_json<T: Serialize>(value: &T) -> CliResult<String> {
    // serde_json's Map is a BTreeMap unless preserve_order is enabled
    let v = serde_json::to_value(value).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Collects a command's outputs in memory and writes them only when the
/// whole command succeeded.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let s = sorted_json(value)?;
        self.add(name, s);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every file through a temporary name and renames it into
    /// place; clears a stale failure marker for `command`.
    pub fn commit(self, command: &str) -> CliResult<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let tmp = self.dir.join(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, contents) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(CliError::io(tmp, e));
            }
            staged.push((tmp, self.dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest) in staged {
            fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
            written.push(dest);
        }
        let marker = failure_marker(&self.dir, command);
        if marker.exists() {
            let _ = fs::remove_file(&marker);
        }
        Ok(written)
    }
}

pub fn failure_marker(dir: &Path, command: &str) -> PathBuf {
    dir.join(format!("{command}.failed"))
}

/// Leaves `<dir>/<command>.failed` holding the error message.
pub fn mark_failed(dir: &Path, command: &str, message: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let marker = failure_marker(dir, command);
    fs::write(&marker, format!("{message}\n")).map_err(|e| CliError::io(&marker, e))?;
    Ok(marker)
}
