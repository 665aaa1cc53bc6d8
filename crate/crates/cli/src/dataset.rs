//! CSV dataset ingestion: a header row of feature names and a numeric body.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use jbshap::Dataset;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error(transparent)]
    Invalid(#[from] jbshap::Error),
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| DatasetError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DatasetError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .zip(&names)
            .map(|(cell, name)| {
                cell.trim().parse::<f64>().map_err(|_| DatasetError::NonNumeric {
                    line,
                    column: name.clone(),
                    value: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(jbshap::Error::InvalidInput(format!("{} has no data rows", path.display())).into());
    }
    Ok(Dataset::from_rows(rows)?.with_names(names)?)
}

/// Writes `data` so that [`load_dataset_csv`] reads it back bit-identically.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let names: Vec<String> = match data.names() {
        Some(n) => n.to_vec(),
        None => (0..data.dim()).map(|j| format!("x{j}")).collect(),
    };
    writeln!(out, "{}", names.join(","))?;
    for row in data.rows() {
        let cells: Vec<String> = row.values().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}
