//! Plain-text matrix and vector files.
//!
//! The formats are deliberately primitive so that files diff cleanly and any
//! language can produce or consume them:
//!
//! - **Matrix**: one row per line, entries comma-separated, plain decimal.
//!   An optional first line `# M N` declares the dimensions; when present it
//!   must agree with the data.
//! - **Vector**: one value per line.
//!
//! Values are written with Rust's shortest-roundtrip `Display`, so a write →
//! read cycle reproduces every `f64` bit-for-bit.
//!
//! # What can go wrong
//!
//! - Ragged rows, unparsable numbers, or a header that contradicts the data
//!   are configuration errors naming the offending line.
//! - Empty files are rejected: a 0×0 operator or empty measurement vector is
//!   never meaningful here.

use std::fs;
use std::path::Path;

use bregman_l0::prelude::Matrix;

use crate::{Error, Result};

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn parse_value(token: &str, path: &Path, line_no: usize) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| {
        Error::Config(format!(
            "{}:{}: cannot parse `{}` as a number",
            path.display(),
            line_no,
            token.trim()
        ))
    })
}

/// Read a matrix file.  See the module docs for the format.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = read_to_string(path)?;
    let mut declared: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            // Only the leading comment may declare dimensions; later comments
            // are ignored as annotations.
            if rows.is_empty() && declared.is_none() {
                let dims: Vec<&str> = rest.split_whitespace().collect();
                if dims.len() == 2 {
                    if let (Ok(m), Ok(n)) = (dims[0].parse(), dims[1].parse()) {
                        declared = Some((m, n));
                    }
                }
            }
            continue;
        }
        let row: Result<Vec<f64>> =
            trimmed.split(',').map(|tok| parse_value(tok, path, line_no)).collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: matrix file has no data rows", path.display())));
    }
    let cols = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Config(format!(
            "{}: row {} has {} entries, expected {}",
            path.display(),
            bad + 1,
            rows[bad].len(),
            cols
        )));
    }
    if let Some((m, n)) = declared {
        if m != rows.len() || n != cols {
            return Err(Error::Config(format!(
                "{}: header declares {}×{} but data is {}×{}",
                path.display(),
                m,
                n,
                rows.len(),
                cols
            )));
        }
    }
    Matrix::from_rows(&rows).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Write a matrix file with a `# M N` header.
pub fn write_matrix(path: &Path, a: &Matrix) -> Result<()> {
    let mut out = format!("# {} {}\n", a.rows(), a.cols());
    for j in 0..a.rows() {
        let row: Vec<String> = (0..a.cols()).map(|i| a.get(j, i).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Read a vector file: one value per line, `#` comments and blank lines
/// skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        values.push(parse_value(trimmed, path, idx + 1)?);
    }
    if values.is_empty() {
        return Err(Error::Config(format!("{}: vector file has no values", path.display())));
    }
    Ok(values)
}

/// Write a vector file, one value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::new();
    for x in v {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
