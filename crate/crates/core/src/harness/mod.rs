//! Task files, example generation, corpus analysis, terminal filling, the
//! repair driver and the inverse-mutation corpus generator.

mod analyze;
mod corpus;
mod fill;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{execute, Database, ExecError, LoadError, Relation};
use crate::sql::{ParseError, Query};

pub use analyze::{analyze_corpus, CorpusStats, HistogramBucket, BUCKET_WIDTH, HISTOGRAM_LIMIT};
pub use corpus::{generate_inverse_corpus, load_seed_golds, single_mutations, InverseTask, SeedGold};
pub use fill::{fill_terminals, FillError, DEFAULT_FILL_CAP};
pub use report::{run_repair, RepairReport, RunOptions, Stage, StageCounts, Summary, TaskReport};

/// One text-to-SQL task as stored in a tasks file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    #[serde(default)]
    pub question: String,
    /// Database directory, relative to the database root.
    pub db_ref: String,
    /// Model beam, best first.
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    /// CSV holding the expected output; overrides the gold-generated example.
    /// Relative to the tasks file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    /// Whether row order of `example` is significant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_ordered: Option<bool>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("execution error: {0}")]
    Exec(#[from] ExecError),
    #[error("{0}")]
    Invalid(String),
}

/// Reads a JSON array of task records.
pub fn load_tasks(path: &Path) -> Result<Vec<TaskRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Json { path: path.to_path_buf(), source: e })
}

/// The example output for a gold query: its result on `db`, ordered iff the
/// query has ORDER BY.
pub fn generate_example(gold: &Query, db: &Database) -> Result<Relation, ExecError> {
    execute(gold, db)
}

/// Loads each database directory once.
#[derive(Debug, Default)]
pub struct DbCache {
    root: PathBuf,
    loaded: BTreeMap<String, Result<Database, String>>,
}

impl DbCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), loaded: BTreeMap::new() }
    }

    pub fn get(&mut self, db_ref: &str) -> Result<&Database, String> {
        let root = &self.root;
        self.loaded
            .entry(db_ref.to_string())
            .or_insert_with(|| Database::load_dir(root.join(db_ref)).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Reads an example CSV (header row required).
pub fn load_example(path: &Path, ordered: bool) -> Result<Relation, HarnessError> {
    let data = fs::read(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    Relation::read_csv(data.as_slice(), ordered)
        .map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))
}
