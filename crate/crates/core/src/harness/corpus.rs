use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{execute, outputs_match, Database, Relation};
use crate::mutate::{candidate_domain, DomainContext, WhereHistory};
use crate::sql::{extract_structure, parse, print, Constant, Query, QueryStructure, SlotId};

use super::{DbCache, HarnessError, TaskRecord};

/// A correct query over one of the seed databases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedGold {
    pub id: String,
    pub db: String,
    pub question: String,
    pub gold: String,
}

pub fn load_seed_golds(path: &Path) -> Result<Vec<SeedGold>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Json { path: path.to_path_buf(), source: e })
}

/// A task made by breaking a gold query, with the reassignments that broke
/// it (slot ids of the gold query's structure, gold values replaced).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseTask {
    #[serde(flatten)]
    pub record: TaskRecord,
    pub applied: Vec<(SlotId, Constant)>,
}

/// Every in-space single reassignment of `query`: each slot paired with each
/// value of its domain under an empty history.
pub fn single_mutations(query: &Query, db: &Database, question: &str) -> Vec<(SlotId, Constant)> {
    let structure = extract_structure(query);
    let ctx = DomainContext::new(db, question);
    let history = WhereHistory::new();
    structure
        .slots()
        .iter()
        .flat_map(|s| candidate_domain(s.id, &structure, &ctx, &history).into_iter().map(move |v| (s.id, v)))
        .collect()
}

fn breaks(structure: &QueryStructure, edits: &[&(SlotId, Constant)], db: &Database, expected: &Relation) -> Option<Query> {
    let mut s = structure.clone();
    for (slot, value) in edits {
        s = s.with_value(*slot, value.clone()).ok()?;
    }
    let q = s.instantiate().ok()?;
    match execute(&q, db) {
        Ok(out) if !outputs_match(&out, expected) => Some(q),
        _ => None,
    }
}

/// Generates `count` tasks, cycling through `golds`, each breaking its gold
/// with `mutations` (1 or 2) reassignments on distinct slots. The broken
/// query must execute and disagree with the gold output. Sampling is uniform
/// over such breakages and fully determined by `seed`.
pub fn generate_inverse_corpus(
    golds: &[SeedGold],
    dbs: &mut DbCache,
    count: usize,
    mutations: usize,
    seed: u64,
) -> Result<Vec<InverseTask>, HarnessError> {
    if !(1..=2).contains(&mutations) {
        return Err(HarnessError::Invalid(format!("mutations per task must be 1 or 2, got {mutations}")));
    }
    if golds.is_empty() && count > 0 {
        return Err(HarnessError::Invalid("no seed gold queries".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prepared = Vec::new();
    for g in golds {
        let db = dbs.get(&g.db).map_err(|e| HarnessError::Invalid(format!("{}: {e}", g.db)))?.clone();
        let query = parse(&g.gold)?;
        let expected = execute(&query, &db)?;
        let singles = single_mutations(&query, &db, &g.question);
        let structure = extract_structure(&query);
        let breaking: Vec<usize> =
            (0..singles.len()).filter(|&i| breaks(&structure, &[&singles[i]], &db, &expected).is_some()).collect();
        prepared.push((db, query, expected, structure, singles, breaking));
    }

    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let g = &golds[n % golds.len()];
        let (db, query, expected, structure, singles, breaking) = &prepared[n % golds.len()];
        let (broken, applied) = if mutations == 1 {
            if breaking.is_empty() {
                return Err(HarnessError::Invalid(format!("{}: no output-breaking mutation", g.id)));
            }
            let pick = &singles[breaking[rng.gen_range(0..breaking.len())]];
            (breaks(structure, &[pick], db, expected).expect("pre-filtered"), vec![pick.clone()])
        } else {
            let mut found = None;
            for _ in 0..100_000 {
                let a = &singles[rng.gen_range(0..singles.len())];
                let b = &singles[rng.gen_range(0..singles.len())];
                if a.0 >= b.0 {
                    continue;
                }
                if let Some(q) = breaks(structure, &[a, b], db, expected) {
                    found = Some((q, vec![a.clone(), b.clone()]));
                    break;
                }
            }
            found.ok_or_else(|| HarnessError::Invalid(format!("{}: no output-breaking mutation pair", g.id)))?
        };
        out.push(InverseTask {
            record: TaskRecord {
                id: format!("{}-m{}-{:03}", g.id, mutations, n),
                question: g.question.clone(),
                db_ref: g.db.clone(),
                candidates: vec![print(&broken)],
                gold: Some(print(query)),
                example: None,
                example_ordered: None,
            },
            applied,
        });
    }
    Ok(out)
}
