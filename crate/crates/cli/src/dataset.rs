use std::path::{Path, PathBuf};

use protest::samplers::sniff_delimiter;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A column picked by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "#{i}"),
            ColumnRef::Name(n) => write!(f, "{n}"),
        }
    }
}

/// Numeric columns of a delimited text file with one header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, col: &ColumnRef, field: &str) -> CliResult<&[f64]> {
        let idx = match col {
            ColumnRef::Index(i) => Some(*i).filter(|i| *i < self.columns.len()),
            ColumnRef::Name(n) => self.headers.iter().position(|h| h == n),
        };
        idx.map(|i| self.columns[i].as_slice()).ok_or_else(|| {
            CliError::config(
                field,
                format!("no column {col} in {} (headers: {})", self.path.display(), self.headers.join(", ")),
            )
        })
    }
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CliError::NotFound(path.to_path_buf())),
        Err(e) => {
            return Err(CliError::BadData {
                path: path.to_path_buf(),
                row: 0,
                column: String::new(),
                reason: e.to_string(),
            })
        }
    };
    let bad = |row: usize, column: String, reason: String| CliError::BadData {
        path: path.to_path_buf(),
        row,
        column,
        reason,
    };
    let delimiter = sniff_delimiter(text.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| bad(1, String::new(), e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(bad(1, String::new(), "missing header row".into()));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        // file row, counting the header as row 1
        let row = i + 2;
        let record = record.map_err(|e| bad(row, String::new(), e.to_string()))?;
        if record.len() != headers.len() {
            return Err(bad(
                row,
                String::new(),
                format!("{} fields, header has {}", record.len(), headers.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(bad(row, headers[j].clone(), "missing value".into()));
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => columns[j].push(v),
                _ => return Err(bad(row, headers[j].clone(), format!("`{cell}` is not a finite number"))),
            }
        }
    }
    Ok(Dataset {
        path: path.to_path_buf(),
        headers,
        columns,
    })
}
