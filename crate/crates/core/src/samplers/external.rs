use std::path::Path;
use std::sync::Arc;

use crate::dist::{Grid, GridFunction, StepCdf};
use crate::error::{Error, Result};

/// How the rows of a draw matrix are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawKind {
    /// Function values on the grid of the first row; with `probabilities`
    /// every entry must lie in `[0, 1]`.
    Functions { probabilities: bool },
    /// Atom weights at the locations of the first row.
    Distributions,
}

#[derive(Debug, Clone)]
pub enum ExternalDraws {
    Functions(Vec<GridFunction>),
    Distributions(Vec<StepCdf>),
}

impl ExternalDraws {
    pub fn len(&self) -> usize {
        match self {
            ExternalDraws::Functions(v) => v.len(),
            ExternalDraws::Distributions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Picks `,`, tab or `;` from the first line, defaulting to `,`.
pub fn sniff_delimiter(first_line: &str) -> u8 {
    b",\t;"
        .iter()
        .copied()
        .find(|d| first_line.as_bytes().contains(d))
        .unwrap_or(b',')
}

/// Reads a draw matrix: the first row holds the grid (or atom locations),
/// every following row one draw. Rows are reported 1-based as in the file.
pub fn ingest_external_draws(path: impl AsRef<Path>, kind: DrawKind) -> Result<ExternalDraws> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let err = |row: usize, reason: String| Error::DrawFile {
        path: path.to_path_buf(),
        row,
        reason,
    };
    let delimiter = sniff_delimiter(text.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| err(row, e.to_string()))?;
        let values = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| err(row, format!("column {}: `{cell}` is not a number", col + 1)))?;
                if !v.is_finite() {
                    return Err(err(row, format!("column {}: non-finite value", col + 1)));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(err(
                    row,
                    format!("{} columns, expected {}", values.len(), first.len()),
                ));
            }
        }
        rows.push(values);
    }
    if rows.len() < 2 {
        return Err(err(rows.len(), "need a grid row and at least one draw".into()));
    }
    let header = rows.remove(0);

    match kind {
        DrawKind::Functions { probabilities } => {
            let grid = Arc::new(
                Grid::scalar(&header).map_err(|e| err(1, e.to_string()))?,
            );
            let draws = rows
                .into_iter()
                .enumerate()
                .map(|(i, values)| {
                    let row = i + 2;
                    if probabilities {
                        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                            return Err(err(row, format!("probability {v} outside [0, 1]")));
                        }
                    }
                    GridFunction::new(grid.clone(), values).map_err(|e| err(row, e.to_string()))
                })
                .collect::<Result<_>>()?;
            Ok(ExternalDraws::Functions(draws))
        }
        DrawKind::Distributions => {
            let draws = rows
                .into_iter()
                .enumerate()
                .map(|(i, weights)| {
                    StepCdf::from_atoms(header.iter().copied().zip(weights))
                        .map_err(|e| err(i + 2, e.to_string()))
                })
                .collect::<Result<_>>()?;
            Ok(ExternalDraws::Distributions(draws))
        }
    }
}
