use serde::Serialize;

use crate::exec::{execute, outputs_match};
use crate::sql::{edit_distance, extract_structure, normalize_for_distance, parse, structures_equal};

use super::{DbCache, TaskRecord};

pub const BUCKET_WIDTH: usize = 5;
/// Distances at or above this land in the overflow bucket.
pub const HISTOGRAM_LIMIT: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramBucket {
    pub lower: usize,
    /// Inclusive; absent for the overflow bucket.
    pub upper: Option<usize>,
    pub count: usize,
}

impl HistogramBucket {
    pub fn label(&self) -> String {
        match self.upper {
            Some(u) => format!("{}-{}", self.lower, u),
            None => format!("{}+", self.lower),
        }
    }
}

/// How far the top candidates of a corpus are from their gold queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    /// Candidate #1 runs but disagrees with gold.
    pub failing: usize,
    /// Candidate #1 does not parse or does not execute.
    pub invalid: usize,
    /// No usable gold or database.
    pub skipped: usize,
    /// Nonzero buckets only, ascending; counts sum to `failing`.
    pub edit_distance_histogram: Vec<HistogramBucket>,
    pub structure_match: usize,
    pub structure_match_rate: f64,
}

fn bucket_of(d: usize) -> usize {
    d.min(HISTOGRAM_LIMIT) / BUCKET_WIDTH
}

/// Classifies candidate #1 of every task against its gold query and
/// histograms the normalized edit distances of the failing ones.
pub fn analyze_corpus(tasks: &[TaskRecord], dbs: &mut DbCache) -> CorpusStats {
    let mut stats = CorpusStats {
        total: tasks.len(),
        failing: 0,
        invalid: 0,
        skipped: 0,
        edit_distance_histogram: Vec::new(),
        structure_match: 0,
        structure_match_rate: 0.0,
    };
    let mut counts = vec![0usize; bucket_of(HISTOGRAM_LIMIT) + 1];
    for task in tasks {
        let Ok(db) = dbs.get(&task.db_ref) else {
            stats.skipped += 1;
            continue;
        };
        let Some(gold_text) = &task.gold else {
            stats.skipped += 1;
            continue;
        };
        let Some(expected) = parse(gold_text).ok().and_then(|g| execute(&g, db).ok().map(|r| (g, r))) else {
            stats.skipped += 1;
            continue;
        };
        let Some(cand_text) = task.candidates.first() else {
            stats.invalid += 1;
            continue;
        };
        let Some(actual) = parse(cand_text).ok().and_then(|c| execute(&c, db).ok().map(|r| (c, r))) else {
            stats.invalid += 1;
            continue;
        };
        if outputs_match(&actual.1, &expected.1) {
            continue;
        }
        stats.failing += 1;
        let d = edit_distance(&normalize_for_distance(cand_text), &normalize_for_distance(gold_text));
        counts[bucket_of(d)] += 1;
        if structures_equal(&extract_structure(&actual.0), &extract_structure(&expected.0)) {
            stats.structure_match += 1;
        }
    }
    stats.edit_distance_histogram = counts
        .into_iter()
        .enumerate()
        .filter(|(_, n)| *n > 0)
        .map(|(b, count)| {
            let lower = b * BUCKET_WIDTH;
            let upper = (lower < HISTOGRAM_LIMIT).then(|| lower + BUCKET_WIDTH - 1);
            HistogramBucket { lower, upper, count }
        })
        .collect();
    if stats.failing > 0 {
        stats.structure_match_rate = stats.structure_match as f64 / stats.failing as f64;
    }
    stats
}
