use std::path::PathBuf;

use serde::Serialize;

use crate::exec::Relation;
use crate::search::{external_fallback, repair_beam, RepairOutcome, RepairStatus, RepairTask, SearchConfig};
use crate::sql::parse;

use super::{generate_example, load_example, DbCache, TaskRecord};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: SearchConfig,
    /// Shell command run on tasks the search could not solve.
    pub fallback: Option<String>,
    /// Base directory for `db_ref`.
    pub db_root: PathBuf,
    /// Base directory for example CSV paths.
    pub tasks_dir: PathBuf,
}

/// Where in the pipeline a task got solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Candidate #1 was already correct.
    Base,
    /// A later candidate was correct as is.
    Beam,
    /// Repaired with at most one constant mutation.
    K1,
    /// Repaired with two constant mutations.
    K2,
    Fallback,
    Unsolved,
    Error,
}

impl Stage {
    fn of(outcome: &RepairOutcome) -> Stage {
        match outcome.status {
            RepairStatus::AlreadyCorrect => Stage::Base,
            _ if !outcome.is_success() => Stage::Unsolved,
            _ if outcome.stats.via_fallback => Stage::Fallback,
            _ if outcome.stats.round.is_none() => Stage::Beam,
            _ if outcome.constant_mutations() <= 1 => Stage::K1,
            _ => Stage::K2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskReport {
    pub id: String,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RepairOutcome>,
    /// 1-based positions of candidates that failed to parse.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub invalid_candidates: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub base: usize,
    pub beam: usize,
    pub k1: usize,
    pub k2: usize,
    pub fallback: usize,
    pub unsolved: usize,
    pub error: usize,
}

/// Per-stage counts and cumulative solve percentages over all tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub counts: StageCounts,
    pub base_pct: f64,
    pub beam_pct: f64,
    pub k1_pct: f64,
    pub k2_pct: f64,
    pub fallback_pct: f64,
}

impl Summary {
    pub fn from_stages(stages: impl IntoIterator<Item = Stage>) -> Summary {
        let mut c = StageCounts::default();
        for s in stages {
            *match s {
                Stage::Base => &mut c.base,
                Stage::Beam => &mut c.beam,
                Stage::K1 => &mut c.k1,
                Stage::K2 => &mut c.k2,
                Stage::Fallback => &mut c.fallback,
                Stage::Unsolved => &mut c.unsolved,
                Stage::Error => &mut c.error,
            } += 1;
        }
        let total = c.base + c.beam + c.k1 + c.k2 + c.fallback + c.unsolved + c.error;
        let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        let cum = [c.base, c.beam, c.k1, c.k2, c.fallback]
            .iter()
            .scan(0, |acc, n| {
                *acc += n;
                Some(pct(*acc))
            })
            .collect::<Vec<_>>();
        Summary {
            total,
            counts: c,
            base_pct: cum[0],
            beam_pct: cum[1],
            k1_pct: cum[2],
            k2_pct: cum[3],
            fallback_pct: cum[4],
        }
    }

    /// Cumulative rates in pipeline order.
    pub fn cumulative(&self) -> [f64; 5] {
        [self.base_pct, self.beam_pct, self.k1_pct, self.k2_pct, self.fallback_pct]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairReport {
    pub tasks: Vec<TaskReport>,
    pub summary: Summary,
}

/// Repairs every task in order and summarizes the stages that solved them.
pub fn run_repair(tasks: &[TaskRecord], opts: &RunOptions) -> RepairReport {
    let mut dbs = DbCache::new(&opts.db_root);
    let reports: Vec<TaskReport> = tasks.iter().map(|t| repair_one(t, opts, &mut dbs)).collect();
    let summary = Summary::from_stages(reports.iter().map(|r| r.stage));
    RepairReport { tasks: reports, summary }
}

fn task_error(id: &str, message: String) -> TaskReport {
    TaskReport { id: id.to_string(), stage: Stage::Error, error: Some(message), outcome: None, invalid_candidates: Vec::new() }
}

fn repair_one(task: &TaskRecord, opts: &RunOptions, dbs: &mut DbCache) -> TaskReport {
    if task.candidates.is_empty() {
        return task_error(&task.id, "task has no candidates".into());
    }
    let db = match dbs.get(&task.db_ref) {
        Ok(db) => db,
        Err(e) => return task_error(&task.id, format!("database {}: {e}", task.db_ref)),
    };
    let expected: Relation = match (&task.example, &task.gold) {
        (Some(path), _) => match load_example(&opts.tasks_dir.join(path), task.example_ordered.unwrap_or(false)) {
            Ok(r) => r,
            Err(e) => return task_error(&task.id, format!("example: {e}")),
        },
        (None, Some(gold)) => match parse(gold).map_err(|e| e.to_string()).and_then(|g| generate_example(&g, db).map_err(|e| e.to_string())) {
            Ok(r) => r,
            Err(e) => return task_error(&task.id, format!("gold: {e}")),
        },
        (None, None) => return task_error(&task.id, "task has neither example nor gold".into()),
    };

    let mut parsed = Vec::new();
    let mut original = Vec::new();
    let mut invalid = Vec::new();
    for (i, text) in task.candidates.iter().enumerate() {
        match parse(text) {
            Ok(q) => {
                parsed.push(q);
                original.push(i + 1);
            }
            Err(_) => invalid.push(i + 1),
        }
    }
    let repair_task = RepairTask::new(parsed, db, expected, task.question.clone());
    let mut outcome = repair_beam(&repair_task, &opts.config);
    outcome.stats.succeeded_candidate = outcome.stats.succeeded_candidate.map(|i| original[i - 1]);
    if outcome.status == RepairStatus::AlreadyCorrect && outcome.stats.succeeded_candidate != Some(1) {
        outcome.status = RepairStatus::Repaired;
    }
    if !outcome.is_success() {
        if let Some(hook) = opts.fallback.as_deref() {
            let fb = external_fallback(&repair_task, Some(hook));
            let mut stats = fb.stats.clone();
            stats.candidates_tried = outcome.stats.candidates_tried;
            stats.mutants_executed = outcome.stats.mutants_executed;
            stats.execution_errors = outcome.stats.execution_errors;
            stats.wall_time += outcome.stats.wall_time;
            outcome = RepairOutcome { stats, ..fb };
        }
    }
    TaskReport { id: task.id.clone(), stage: Stage::of(&outcome), error: None, outcome: Some(outcome), invalid_candidates: invalid }
}
