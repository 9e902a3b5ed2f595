//! CSV and JSON file helpers. Matrices are stored as comma-separated text with
//! a header row; numbers are written with 17 significant digits so reading a
//! file back reproduces the exact `f64` values.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{LabelVector, Matrix};
use crate::metrics::ReliabilityBin;

/// Formats with 17 significant digits (lossless for `f64`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_string(path, &s)
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub values: Matrix,
}

/// Parses a numeric CSV with a header row. Errors name the 1-based line.
pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::validation(format!("CSV header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::validation("CSV has no header row"));
    }
    let cols = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::validation(format!("line {line}: malformed CSV row ({e})"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols {
            return Err(Error::validation(format!(
                "line {line}: expected {cols} fields, found {}",
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::validation(format!(
                    "line {line}: column '{}' is not a number: '{field}'",
                    header[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "line {line}: column '{}' is not finite ({field})",
                    header[j]
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::validation("CSV has a header but no data rows"));
    }
    Ok(Table {
        header,
        values: Matrix::from_vec(rows, cols, data)?,
    })
}

pub fn read_matrix_csv(path: &Path) -> Result<Table> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_matrix_csv(f).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn matrix_csv_string(header: &[String], values: &Matrix) -> Result<String> {
    if header.len() != values.cols() {
        return Err(Error::validation(format!(
            "{} column names for {} columns",
            header.len(),
            values.cols()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in values.iter_rows() {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))
            .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::validation(format!("CSV write: {e}"))
}

pub fn write_matrix_csv(path: &Path, header: &[String], values: &Matrix) -> Result<()> {
    write_string(path, &matrix_csv_string(header, values)?)
}

/// Parses a single column of zero-based integer labels. A first line that is
/// not an integer is treated as a header.
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::validation(format!(
                    "line {}: label '{line}' is not a non-negative integer",
                    i + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::validation("label file has no labels"));
    }
    Ok(out)
}

pub fn read_labels(path: &Path, n_classes: usize) -> Result<LabelVector> {
    let v = parse_labels(&read_to_string(path)?)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    LabelVector::new(v, n_classes)
}

pub fn labels_csv_string(labels: &[usize]) -> String {
    let mut s = String::from("label\n");
    for y in labels {
        s.push_str(&y.to_string());
        s.push('\n');
    }
    s
}

/// Reliability bins as CSV: `lo,hi,count,avg_conf,avg_acc`.
pub fn bins_csv_string(bins: &[ReliabilityBin]) -> String {
    let mut s = String::from("lo,hi,count,avg_conf,avg_acc\n");
    for b in bins {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(b.lo),
            fmt_f64(b.hi),
            b.count,
            fmt_f64(b.avg_conf),
            fmt_f64(b.avg_acc)
        ));
    }
    s
}

/// Features plus a trailing `label` column.
pub fn dataset_csv_string(features: &Matrix, labels: &[usize]) -> Result<String> {
    let mut header: Vec<String> = (0..features.cols()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for (row, y) in features.iter_rows().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}
