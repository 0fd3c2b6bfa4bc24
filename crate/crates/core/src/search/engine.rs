use std::collections::HashSet;
use std::time::Instant;

use crate::exec::{execute, multiset_values, outputs_match, CellMultiset};
use crate::mutate::{
    candidate_domain, fresh_fills, record_history, structural_variants, DomainContext, Mutation, StructuralEdit,
    WhereHistory,
};
use crate::sql::structure::{extract_structure, SlotId};
use crate::sql::{print, Constant, Query};

use super::{jaccard, RepairOutcome, RepairStats, RepairStatus, RepairTask, SearchConfig};

/// An executed mutant whose output did not match, with its similarity to the
/// expected output.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMutant {
    pub query: Query,
    pub mutations: Vec<Mutation>,
    pub score: f64,
    /// Position in execution order.
    pub order: usize,
}

impl ScoredMutant {
    pub fn structural_edits(&self) -> usize {
        self.mutations.iter().filter(|m| m.is_structural()).count()
    }
}

/// Result of [`single_mutation_repair`]: the outcome plus every executed
/// mismatching mutant, in execution order.
#[derive(Debug, Clone)]
pub struct SinglePass {
    pub outcome: RepairOutcome,
    pub failed: Vec<ScoredMutant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Budget,
    Timeout,
}

enum Attempt {
    Found,
    /// Executed without matching; carries the row count when it ran.
    Missed(Option<usize>),
    Skipped,
    Stopped,
}

struct Searcher<'t, 'a> {
    task: &'t RepairTask<'a>,
    ctx: DomainContext<'a>,
    expected_values: CellMultiset,
    seen: HashSet<String>,
    executed: usize,
    errors: usize,
    limit: usize,
    deadline: Instant,
    stop: Option<Stop>,
    keep_pool: bool,
    pool: Vec<ScoredMutant>,
    found: Option<(Query, Vec<Mutation>)>,
}

impl<'t, 'a> Searcher<'t, 'a> {
    fn new(task: &'t RepairTask<'a>, start: &Query, limit: usize, deadline: Instant) -> Self {
        let mut seen = HashSet::new();
        seen.insert(print(start));
        Self {
            task,
            ctx: DomainContext::new(task.db, &task.question),
            expected_values: multiset_values(&task.expected),
            seen,
            executed: 0,
            errors: 0,
            limit,
            deadline,
            stop: None,
            keep_pool: true,
            pool: Vec::new(),
            found: None,
        }
    }

    fn halted(&self) -> bool {
        self.stop.is_some() || self.found.is_some()
    }

    fn attempt(&mut self, query: Query, path: Vec<Mutation>) -> Attempt {
        if self.halted() {
            return Attempt::Stopped;
        }
        if self.executed >= self.limit {
            self.stop = Some(Stop::Budget);
            return Attempt::Stopped;
        }
        if Instant::now() >= self.deadline {
            self.stop = Some(Stop::Timeout);
            return Attempt::Stopped;
        }
        if !self.seen.insert(print(&query)) {
            return Attempt::Skipped;
        }
        let order = self.executed;
        self.executed += 1;
        match execute(&query, self.task.db) {
            Err(_) => {
                self.errors += 1;
                Attempt::Missed(None)
            }
            Ok(rel) if outputs_match(&rel, &self.task.expected) => {
                self.found = Some((query, path));
                Attempt::Found
            }
            Ok(rel) => {
                if self.keep_pool {
                    let score = jaccard(&multiset_values(&rel), &self.expected_values);
                    self.pool.push(ScoredMutant { query, mutations: path, score, order });
                }
                Attempt::Missed(Some(rel.len()))
            }
        }
    }

    /// Every slot (except `skip`) times every candidate value of `base`.
    fn constant_tier(&mut self, base: &Query, path: &[Mutation], skip: &[SlotId]) {
        let structure = extract_structure(base);
        let expected_rows = self.task.expected.len();
        let mut history = WhereHistory::new();
        if let Ok(out) = execute(base, self.task.db) {
            for slot in structure.slots() {
                if let Some(v) = structure.value(slot.id) {
                    record_history(&mut history, &structure, slot.id, v, out.len(), expected_rows);
                }
            }
        }
        for slot in structure.slots() {
            if skip.contains(&slot.id) {
                continue;
            }
            for value in candidate_domain(slot.id, &structure, &self.ctx, &history) {
                if self.halted() {
                    return;
                }
                if let (Constant::Literal(x), Some(b)) = (&value, history.bounds(slot.id)) {
                    if x.as_f64().is_some_and(|f| !b.admits(f)) {
                        continue;
                    }
                }
                let Ok(query) = structure.with_value(slot.id, value.clone()).and_then(|s| s.instantiate()) else {
                    continue;
                };
                let mut p = path.to_vec();
                p.push(Mutation::Constant { slot: slot.id, value: value.clone() });
                if let Attempt::Missed(Some(rows)) = self.attempt(query, p) {
                    record_history(&mut history, &structure, slot.id, &value, rows, expected_rows);
                }
            }
        }
    }

    /// Structural variants of `base` with every fill of their fresh slots,
    /// then one further constant mutation on each executable filled variant.
    fn structural_tiers(&mut self, base: &Query, path: &[Mutation]) {
        let Ok(actual) = execute(base, self.task.db) else { return };
        let structure = extract_structure(base);
        let mut filled = Vec::new();
        for variant in structural_variants(&structure, &actual, &self.task.expected) {
            let fresh = variant.fresh_slots();
            for fills in fresh_fills(&variant, &self.ctx) {
                if self.halted() {
                    return;
                }
                let mut s = variant.structure.clone();
                if fills.iter().any(|(id, v)| s.assign(*id, v.clone()).is_err()) {
                    continue;
                }
                let Ok(query) = s.instantiate() else { continue };
                let mut p = path.to_vec();
                p.push(Mutation::Structural { edit: StructuralEdit { variant: variant.variant.clone(), fills } });
                if let Attempt::Missed(Some(_)) = self.attempt(query.clone(), p.clone()) {
                    filled.push((query, p, fresh.clone()));
                }
            }
        }
        for (query, p, fresh) in filled {
            if self.halted() {
                return;
            }
            self.constant_tier(&query, &p, &fresh);
        }
    }

    fn round_one(&mut self, query: &Query) {
        self.constant_tier(query, &[], &[]);
        self.structural_tiers(query, &[]);
    }

    /// Re-runs single-mutation search from the best-ranked failed mutants:
    /// constant mutations on every base first, then structural edits on the
    /// bases that have none yet. Plain constant mutants and mutants carrying
    /// a structural edit each get `beam_width` places.
    fn round_two(&mut self, beam_width: usize) {
        let mut pool = std::mem::take(&mut self.pool);
        rank(&mut pool);
        let (mut ranked, mut structural): (Vec<_>, Vec<_>) = pool.into_iter().partition(|m| m.structural_edits() == 0);
        ranked.truncate(beam_width);
        structural.truncate(beam_width);
        ranked.extend(structural);
        self.keep_pool = false;
        for base in &ranked {
            self.constant_tier(&base.query, &base.mutations, &[]);
        }
        for base in ranked.iter().filter(|b| b.structural_edits() == 0) {
            self.structural_tiers(&base.query, &base.mutations);
        }
    }

    fn stats(&self) -> RepairStats {
        RepairStats { candidates_tried: 1, mutants_executed: self.executed, execution_errors: self.errors, ..Default::default() }
    }
}

/// Orders failed mutants best first: higher score, fewer structural edits,
/// earlier execution.
pub(crate) fn rank(pool: &mut [ScoredMutant]) {
    pool.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.structural_edits().cmp(&b.structural_edits()))
            .then(a.order.cmp(&b.order))
    });
}

fn already_correct(query: &Query, task: &RepairTask<'_>) -> bool {
    execute(query, task.db).is_ok_and(|out| outputs_match(&out, &task.expected))
}

fn success(task: &RepairTask<'_>, query: Query, mutations: Vec<Mutation>, stats: RepairStats) -> RepairOutcome {
    let out = execute(&query, task.db).expect("accepted repair must execute");
    assert!(outputs_match(&out, &task.expected), "accepted repair must match the example");
    let status = if mutations.is_empty() && stats.round.is_none() && stats.succeeded_candidate == Some(1) {
        RepairStatus::AlreadyCorrect
    } else {
        RepairStatus::Repaired
    };
    RepairOutcome { status, repaired_query: Some(query), mutations, stats, reason: None }
}

fn finish(searcher: Searcher<'_, '_>, round: usize, started: Instant) -> RepairOutcome {
    let mut stats = searcher.stats();
    stats.wall_time = started.elapsed();
    match searcher.found {
        Some((query, mutations)) => {
            stats.succeeded_candidate = Some(1);
            stats.round = Some(round);
            success(searcher.task, query, mutations, stats)
        }
        None if searcher.stop == Some(Stop::Timeout) => {
            RepairOutcome::failed(RepairStatus::Timeout, stats, "time budget exhausted")
        }
        None => RepairOutcome::failed(RepairStatus::Exhausted, stats, "no mutant matched the example"),
    }
}

fn unmutated(task: &RepairTask<'_>, query: &Query, started: Instant) -> RepairOutcome {
    let stats = RepairStats {
        candidates_tried: 1,
        succeeded_candidate: Some(1),
        wall_time: started.elapsed(),
        ..Default::default()
    };
    success(task, query.clone(), Vec::new(), stats)
}

/// Tries every single mutation of `query` (original structure and each
/// structural variant) and stops at the first match.
pub fn single_mutation_repair(query: &Query, task: &RepairTask<'_>, cfg: &SearchConfig) -> SinglePass {
    let started = Instant::now();
    if already_correct(query, task) {
        return SinglePass { outcome: unmutated(task, query, started), failed: Vec::new() };
    }
    let mut s = Searcher::new(task, query, cfg.per_candidate_budget, started + cfg.time_budget);
    s.round_one(query);
    let failed = std::mem::take(&mut s.pool);
    SinglePass { outcome: finish(s, 1, started), failed }
}

/// Single-mutation search, then (when `max_mutations >= 2`) a second round
/// from the best-ranked failures (`beam_width` of each kind). The first round may use at
/// most half the budget when a second round follows.
pub fn multi_mutation_repair(query: &Query, task: &RepairTask<'_>, cfg: &SearchConfig) -> RepairOutcome {
    let started = Instant::now();
    multi_until(query, task, cfg, started, started + cfg.time_budget)
}

fn multi_until(
    query: &Query,
    task: &RepairTask<'_>,
    cfg: &SearchConfig,
    started: Instant,
    deadline: Instant,
) -> RepairOutcome {
    if already_correct(query, task) {
        return unmutated(task, query, started);
    }
    let second = cfg.max_mutations >= 2 && cfg.beam_width > 0;
    let first_limit = if second { cfg.per_candidate_budget / 2 } else { cfg.per_candidate_budget };
    let mut s = Searcher::new(task, query, first_limit, deadline);
    s.round_one(query);
    if s.found.is_some() || !second || s.stop == Some(Stop::Timeout) {
        return finish(s, 1, started);
    }
    s.stop = None;
    s.limit = cfg.per_candidate_budget;
    s.round_two(cfg.beam_width);
    finish(s, 2, started)
}

/// Checks every candidate unmutated, then mutates the first `use_top_n`
/// candidates in order until one is repaired.
pub fn repair_beam(task: &RepairTask<'_>, cfg: &SearchConfig) -> RepairOutcome {
    let started = Instant::now();
    let deadline = started + cfg.time_budget;
    for (i, q) in task.candidates.iter().enumerate() {
        if already_correct(q, task) {
            let mut out = unmutated(task, q, started);
            out.stats.candidates_tried = i + 1;
            out.stats.succeeded_candidate = Some(i + 1);
            if i > 0 {
                out.status = RepairStatus::Repaired;
            }
            return out;
        }
    }
    let mut total = RepairStats::default();
    let mut timed_out = false;
    for (i, q) in task.candidates.iter().take(cfg.use_top_n).enumerate() {
        let out = multi_until(q, task, cfg, started, deadline);
        total.candidates_tried += 1;
        total.mutants_executed += out.stats.mutants_executed;
        total.execution_errors += out.stats.execution_errors;
        if out.is_success() {
            let mut out = out;
            out.stats = RepairStats {
                succeeded_candidate: Some(i + 1),
                round: out.stats.round,
                wall_time: started.elapsed(),
                ..total
            };
            out.status = RepairStatus::Repaired;
            return out;
        }
        if out.status == RepairStatus::Timeout {
            timed_out = true;
            break;
        }
    }
    total.wall_time = started.elapsed();
    if timed_out {
        RepairOutcome::failed(RepairStatus::Timeout, total, "time budget exhausted")
    } else {
        RepairOutcome::failed(RepairStatus::Exhausted, total, "no candidate could be repaired")
    }
}
