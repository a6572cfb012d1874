//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset construction, the test statistics, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid group '{label}': {msg}")]
    InvalidGroup { label: String, msg: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// The within-group product dispersion vanishes everywhere, so the
    /// quasi-F ratio is undefined at every grid cell. This happens exactly
    /// when every group consists of identical curves.
    #[error("SSE surface is identically zero; the quasi-F ratio is undefined (every group's curves are identical)")]
    DegenerateSse,

    /// Fourth-moment diagonal entries at or below the floor; normalization
    /// would divide by (near-)zero at the listed grid cells.
    #[error("fourth-moment diagonal is non-positive at {} grid cell(s), first few: {:?}", cells.len(), preview(cells))]
    DegenerateFourthMoment { cells: Vec<(usize, usize)> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset file, line {line}: {msg}")]
    DatasetFormat { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn preview(cells: &[(usize, usize)]) -> Vec<(usize, usize)> {
    cells.iter().take(8).copied().collect()
}

pub type Result<T> = std::result::Result<T, Error>;
