//! In-memory databases, query evaluation and output comparison.

mod database;
mod eval;
mod relation;
mod schema;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use database::Database;
pub use eval::{execute, like_match, ExecError};
pub use relation::{multiset_values, outputs_match, CellMultiset, Relation};
pub use schema::{ColumnDef, ColumnType, ForeignKey, Schema, TableDef};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("table {table}, row {row}, column {column}: {message}")]
    Cell { table: String, row: usize, column: String, message: String },
}

impl LoadError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> LoadError {
        LoadError::Io { path: path.to_path_buf(), source }
    }
}
