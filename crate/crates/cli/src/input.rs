//! CSV ingestion.

use std::path::{Path, PathBuf};

use outlyingness::{DMatrix, DataMatrix};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// A parsed input file.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: DataMatrix,
    /// File line numbers of rows skipped by `--drop-incomplete`.
    pub dropped_lines: Vec<u64>,
    /// Hex SHA-256 of the raw file bytes.
    pub sha256: String,
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a comma-separated numeric table. The first row is a header when none
/// of its cells is a number. Rows with a missing or non-numeric cell are an
/// error unless `drop_incomplete` is set, in which case they are skipped.
pub fn load_csv(path: &Path, drop_incomplete: bool) -> Result<LoadedData> {
    let bytes = std::fs::read(path)?;
    let sha256 = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());

    let mut names: Option<Vec<String>> = None;
    let mut width = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut incomplete = Vec::new();
    let mut ragged = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if k == 0 && record.iter().all(|c| parse_cell(c).is_none()) {
            names = Some(record.iter().map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            ragged.push(line);
            continue;
        }
        match record.iter().map(parse_cell).collect::<Option<Vec<f64>>>() {
            Some(row) => rows.push(row),
            None => incomplete.push(line),
        }
    }

    let path_buf = PathBuf::from(path);
    if !ragged.is_empty() {
        return Err(CliError::ParseError {
            path: path_buf,
            lines: ragged,
            message: format!("expected {} fields per row", width.unwrap_or(0)),
        });
    }
    if !incomplete.is_empty() && !drop_incomplete {
        return Err(CliError::ParseError {
            path: path_buf,
            lines: incomplete,
            message: "missing or non-numeric cells (use --drop-incomplete to skip such rows)"
                .into(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::EmptyInput { path: path_buf });
    }
    let (n, p) = (rows.len(), rows[0].len());
    let values = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    Ok(LoadedData {
        data: DataMatrix::new(values, names)?,
        dropped_lines: incomplete,
        sha256,
    })
}
