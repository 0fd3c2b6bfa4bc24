//! Repair search: single-mutation passes, Jaccard-ranked second round, the
//! candidate beam and the external fallback.

mod engine;
mod fallback;

use std::time::Duration;

use serde::{Serialize, Serializer};

use crate::exec::{CellMultiset, Database, Relation};
use crate::mutate::Mutation;
use crate::sql::{print, Query};

pub use engine::{multi_mutation_repair, repair_beam, single_mutation_repair, ScoredMutant, SinglePass};
pub use fallback::{external_fallback, FALLBACK_ENV};

/// Multiset Jaccard coefficient `|m ∩ u| / (|m| + |u| - |m ∩ u|)`; two empty
/// multisets score 1.
pub fn jaccard(m: &CellMultiset, u: &CellMultiset) -> f64 {
    let inter = m.intersection_size(u);
    let union = m.len() + u.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Constant mutations allowed along one repair path (1 or 2).
    pub max_mutations: usize,
    /// Failed mutants promoted to the second round, counted separately for
    /// plain constant mutants and for those with a structural edit.
    pub beam_width: usize,
    /// Mutant executions allowed per candidate query.
    pub per_candidate_budget: usize,
    /// Wall-clock limit for a whole task.
    pub time_budget: Duration,
    /// Candidates of the beam that are mutated, in order.
    pub use_top_n: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_mutations: 2,
            beam_width: 10,
            per_candidate_budget: 20_000,
            time_budget: Duration::from_secs(60),
            use_top_n: 10,
        }
    }
}

/// One repair problem: the model's ranked candidates, the database and the
/// example output to reproduce.
#[derive(Debug, Clone)]
pub struct RepairTask<'a> {
    pub candidates: Vec<Query>,
    pub db: &'a Database,
    pub expected: Relation,
    /// Natural-language question; its literals widen the literal pools.
    pub question: String,
}

impl<'a> RepairTask<'a> {
    pub fn new(candidates: Vec<Query>, db: &'a Database, expected: Relation, question: impl Into<String>) -> Self {
        Self { candidates, db, expected, question: question.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairStatus {
    AlreadyCorrect,
    Repaired,
    Exhausted,
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RepairStats {
    pub candidates_tried: usize,
    pub mutants_executed: usize,
    pub execution_errors: usize,
    /// Excluded from reports so that they stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
    /// 1-based index of the candidate that matched.
    pub succeeded_candidate: Option<usize>,
    /// Search round that found the repair (1 or 2); absent for unmutated hits.
    pub round: Option<usize>,
    pub via_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairOutcome {
    pub status: RepairStatus,
    #[serde(serialize_with = "query_as_sql")]
    pub repaired_query: Option<Query>,
    pub mutations: Vec<Mutation>,
    pub stats: RepairStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl RepairOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.status, RepairStatus::AlreadyCorrect | RepairStatus::Repaired)
    }

    /// Constant mutations on the repair path; structural edits are free.
    pub fn constant_mutations(&self) -> usize {
        self.mutations.iter().filter(|m| !m.is_structural()).count()
    }

    pub(crate) fn failed(status: RepairStatus, stats: RepairStats, reason: impl Into<String>) -> Self {
        Self { status, repaired_query: None, mutations: Vec::new(), stats, reason: Some(reason.into()) }
    }
}

fn query_as_sql<S: Serializer>(q: &Option<Query>, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&print(q)),
        None => s.serialize_none(),
    }
}
