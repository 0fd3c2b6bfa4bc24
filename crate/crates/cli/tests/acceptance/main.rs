//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

mod gen;
mod oracle;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqlmend_core::exec::{execute, outputs_match, Database, Relation};
use sqlmend_core::harness::{
    generate_inverse_corpus, load_seed_golds, load_tasks, run_repair, single_mutations, DbCache, InverseTask, RunOptions,
    SeedGold, Stage, Summary, TaskRecord,
};
use sqlmend_core::mutate::{candidate_domain, history_operator, join_tables, DomainContext, EditVariant, Mutation, WhereHistory};
use sqlmend_core::search::{jaccard, SearchConfig};
use sqlmend_core::sql::{
    edit_distance, extract_structure, normalize_for_distance, parse, print, Constant, Query, SortDir,
};
use sqlmend_core::Value;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn seed_dir() -> PathBuf {
    fixtures().join("seed")
}

fn golds() -> Vec<SeedGold> {
    load_seed_golds(&seed_dir().join("golds.json")).expect("seed golds load")
}

fn corpus(mutations: usize, count: usize, seed: u64) -> Vec<InverseTask> {
    let mut dbs = DbCache::new(seed_dir());
    generate_inverse_corpus(&golds(), &mut dbs, count, mutations, seed).expect("corpus generates")
}

fn records(tasks: &[InverseTask]) -> Vec<TaskRecord> {
    tasks.iter().map(|t| t.record.clone()).collect()
}

fn options(max_mutations: usize, db_root: PathBuf) -> RunOptions {
    RunOptions {
        config: SearchConfig { max_mutations, ..SearchConfig::default() },
        fallback: None,
        tasks_dir: db_root.clone(),
        db_root,
    }
}

fn solved(s: &Summary) -> usize {
    let c = &s.counts;
    c.base + c.beam + c.k1 + c.k2 + c.fallback
}

fn monotone(s: &Summary) -> bool {
    let cum = s.cumulative();
    cum.windows(2).all(|w| w[0] <= w[1]) && cum.iter().all(|p| (0.0..=100.0).contains(p))
}

fn cells(rel: &Relation) -> Vec<Value> {
    rel.rows.iter().flatten().cloned().collect()
}

fn criterion1(summaries: &mut Vec<Summary>) -> Outcome {
    let tasks = records(&corpus(1, 200, 1));
    let started = Instant::now();
    let report = run_repair(&tasks, &options(1, seed_dir()));
    let total = started.elapsed();
    let mut times: Vec<Duration> =
        report.tasks.iter().filter_map(|t| t.outcome.as_ref()).map(|o| o.stats.wall_time).collect();
    times.sort();
    let median = times.get(times.len() / 2).copied().unwrap_or_default();
    let ok = solved(&report.summary);
    summaries.push(report.summary);
    let detail = format!("{ok}/200 single-slip tasks repaired, median {median:?} per task, total {total:?}");
    if ok == 200 && median < Duration::from_secs(2) && total < Duration::from_secs(300) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Rank of `target` among the executed single mutants of `broken`, scored by
/// the reference Jaccard and ordered by score then enumeration order.
fn intermediate_in_beam(broken: &Query, target: &Query, db: &Database, expected: &Relation, question: &str, width: usize) -> bool {
    let structure = extract_structure(broken);
    let want = cells(expected);
    let mut seen = std::collections::HashSet::from([print(broken)]);
    let mut scored: Vec<(String, f64)> = Vec::new();
    for (slot, value) in single_mutations(broken, db, question) {
        let Ok(q) = structure.with_value(slot, value).and_then(|s| s.instantiate()) else { continue };
        let sql = print(&q);
        if !seen.insert(sql.clone()) {
            continue;
        }
        let Ok(out) = execute(&q, db) else { continue };
        if outputs_match(&out, expected) {
            continue;
        }
        scored.push((sql, oracle::jaccard(&cells(&out), &want)));
    }
    let target_sql = print(target);
    let Some(pos) = scored.iter().position(|(s, _)| *s == target_sql) else { return false };
    let score = scored[pos].1;
    let rank = scored.iter().enumerate().filter(|(i, (_, s))| *s > score || (*s == score && *i < pos)).count();
    rank < width
}

fn criterion2(summaries: &mut Vec<Summary>) -> Outcome {
    let tasks = corpus(2, 100, 2);
    let recs = records(&tasks);
    let at1 = run_repair(&recs, &options(1, seed_dir()));
    let at2 = run_repair(&recs, &options(2, seed_dir()));
    let (s1, s2) = (solved(&at1.summary), solved(&at2.summary));

    let width = SearchConfig::default().beam_width;
    let mut dbs = DbCache::new(seed_dir());
    let mut eligible = 0;
    let mut missed = Vec::new();
    for (task, rep) in tasks.iter().zip(&at2.tasks) {
        let db = dbs.get(&task.record.db_ref).expect("seed db").clone();
        let gold = parse(task.record.gold.as_deref().unwrap()).unwrap();
        let broken = parse(&task.record.candidates[0]).unwrap();
        let expected = execute(&gold, &db).unwrap();
        let gold_structure = extract_structure(&gold);
        let broken_structure = extract_structure(&broken);
        let in_beam = task.applied.iter().any(|(slot, _)| {
            let restored = gold_structure.value(*slot).cloned().unwrap();
            let Ok(mid) = broken_structure.with_value(*slot, restored).and_then(|s| s.instantiate()) else { return false };
            intermediate_in_beam(&broken, &mid, &db, &expected, &task.record.question, width)
        });
        if in_beam {
            eligible += 1;
            if !matches!(rep.stage, Stage::Base | Stage::Beam | Stage::K1 | Stage::K2) {
                missed.push(task.record.id.clone());
            }
        }
    }
    summaries.push(at1.summary);
    summaries.push(at2.summary);
    let detail = format!(
        "solved {s1}/100 at K=1 and {s2}/100 at K=2; {} of {eligible} tasks with an intermediate in the top {width} repaired{}",
        eligible - missed.len(),
        if missed.is_empty() { String::new() } else { format!(" (missed: {})", missed.join(", ")) }
    );
    if s2 > s1 && missed.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion3() -> Outcome {
    let tasks = load_tasks(&fixtures().join("busiest_airline.json")).map_err(|e| e.to_string())?;
    let report = run_repair(&tasks, &options(2, fixtures()));
    let task = &report.tasks[0];
    let outcome = task.outcome.as_ref().ok_or("no outcome")?;
    let repaired = outcome.repaired_query.as_ref().ok_or_else(|| format!("not repaired: {:?}", outcome.reason))?;
    let db = Database::load_dir(fixtures().join("seed/flights")).map_err(|e| e.to_string())?;
    let gold = parse(tasks[0].gold.as_deref().unwrap()).unwrap();
    let matches = outputs_match(&execute(repaired, &db).map_err(|e| e.to_string())?, &execute(&gold, &db).unwrap());
    let structural: Vec<&EditVariant> = outcome
        .mutations
        .iter()
        .filter_map(|m| match m {
            Mutation::Structural { edit } => Some(&edit.variant),
            _ => None,
        })
        .collect();
    let constants: Vec<&Constant> = outcome
        .mutations
        .iter()
        .filter_map(|m| match m {
            Mutation::Constant { value, .. } => Some(value),
            _ => None,
        })
        .collect();
    let detail = format!("repaired to `{}` with {} constant mutations", print(repaired), outcome.constant_mutations());
    let has = |c: &Constant| constants.contains(&c);
    if matches
        && structural == [&EditVariant::AddSelectColumn { count: 1 }]
        && outcome.constant_mutations() == 2
        && has(&Constant::Direction(SortDir::Desc))
        && has(&Constant::Literal(Value::Int(1)))
    {
        Ok(detail)
    } else {
        Err(format!("{detail}; mutations {:?}", outcome.mutations))
    }
}

fn random_cell(rng: &mut ChaCha8Rng) -> Value {
    match rng.gen_range(0..4) {
        0 => Value::Null,
        1 => Value::Int(rng.gen_range(-3..4)),
        2 => Value::Real(rng.gen_range(-3..4) as f64 / 2.0),
        _ => Value::Text(["a", "b", "B", "ab"][rng.gen_range(0..4)].to_string()),
    }
}

fn criterion4() -> Outcome {
    let ms = |v: &[Value]| v.iter().cloned().collect();
    let a = vec![Value::Int(1), Value::Text("x".into())];
    let b = vec![Value::Int(2), Value::Text("y".into())];
    if jaccard(&ms(&a), &ms(&a)) != 1.0 || jaccard(&ms(&a), &ms(&b)) != 0.0 {
        return Err("identical or disjoint case wrong".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m: Vec<Value> = (0..rng.gen_range(0..12)).map(|_| random_cell(&mut rng)).collect();
        let u: Vec<Value> = (0..rng.gen_range(0..12)).map(|_| random_cell(&mut rng)).collect();
        worst = worst.max((jaccard(&ms(&m), &ms(&u)) - oracle::jaccard(&m, &u)).abs());
    }
    let detail = format!("1000 random multiset pairs, max deviation {worst:e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion5() -> Outcome {
    let alphabet: Vec<char> = "ab c.'é_".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut wrong = 0;
    for _ in 0..1000 {
        let mut s = || -> String { (0..rng.gen_range(0..=60)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect() };
        let (a, b) = (s(), s());
        if edit_distance(&a, &b) != oracle::edit_distance(&a, &b) {
            wrong += 1;
        }
    }
    let n1 = normalize_for_distance("airline.names");
    let n2 = normalize_for_distance("SELECT airline.names FROM airline");
    let detail = format!("{wrong} of 1000 random pairs disagree with the reference; normalized `{n1}`, `{n2}`");
    if wrong == 0 && n1 == "names" && n2 == "selectnamesfromairline" {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Returns the number of result rows when both evaluators agree.
fn compare_with_oracle(q: &Query, db: &Database) -> Result<usize, String> {
    let sql = print(q);
    let reparsed = parse(&sql).map_err(|e| format!("`{sql}` does not parse: {e}"))?;
    let got = execute(&reparsed, db).map_err(|e| format!("`{sql}` failed: {e}"))?;
    let want = oracle::evaluate(q, db);
    let got = oracle::Table { columns: got.columns, rows: got.rows, ordered: got.ordered };
    if got == want {
        Ok(got.rows.len())
    } else {
        Err(format!("`{sql}`: evaluator {got:?}, oracle {want:?}"))
    }
}

fn criterion6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut nonempty = 0;
    for _ in 0..500 {
        let db = gen::database(&mut rng);
        let q = gen::query(&mut rng, &db);
        match compare_with_oracle(&q, &db) {
            Ok(n) => nonempty += usize::from(n > 0),
            Err(e) => failures.push(e),
        }
    }
    let mut dbs = DbCache::new(seed_dir());
    let golds = golds();
    for g in &golds {
        let db = dbs.get(&g.db).unwrap().clone();
        if let Err(e) = compare_with_oracle(&parse(&g.gold).unwrap(), &db) {
            failures.push(e);
        }
    }
    let detail = format!(
        "500 random queries ({nonempty} with rows) and {} seed golds, {} disagreements",
        golds.len(),
        failures.len()
    );
    match failures.first() {
        None => Ok(detail),
        Some(first) => Err(format!("{detail}; first: {first}")),
    }
}

fn criterion7() -> Outcome {
    let mut joins_checked = 0;
    for name in ["flights", "school", "store"] {
        let db = Database::load_dir(seed_dir().join(name)).map_err(|e| e.to_string())?;
        let schema = db.schema().clone();
        for base in &schema.tables {
            let allowed = join_tables(&db, &[base.name.as_str()]);
            for other in schema.tables.iter().filter(|t| t.name != base.name && !allowed.contains(&t.name)) {
                for a in &base.columns {
                    for b in other.columns.iter().filter(|b| b.ty.is_numeric() == a.ty.is_numeric()) {
                        let sql = format!(
                            "SELECT * FROM {} JOIN {} ON {}.{} = {}.{}",
                            base.name, other.name, other.name, b.name, base.name, a.name
                        );
                        let out = execute(&parse(&sql).unwrap(), &db).map_err(|e| format!("{sql}: {e}"))?;
                        if !out.is_empty() {
                            return Err(format!("excluded join `{sql}` returned {} rows", out.len()));
                        }
                        joins_checked += 1;
                    }
                }
            }
        }
    }

    let mut dbs = DbCache::new(seed_dir());
    let mut cases: Vec<(String, String, String, String)> =
        golds().into_iter().map(|g| (g.db, g.question, g.gold.clone(), g.gold)).collect();
    for t in corpus(1, 200, 1).into_iter().chain(corpus(2, 100, 2)) {
        let r = t.record;
        cases.push((r.db_ref, r.question, r.candidates[0].clone(), r.gold.unwrap()));
    }
    let mut pruned = 0;
    for (db_ref, question, text, gold) in &cases {
        let db = dbs.get(db_ref).unwrap().clone();
        let expected = execute(&parse(gold).unwrap(), &db).unwrap().len();
        let query = parse(text).unwrap();
        let structure = extract_structure(&query);
        let ctx = DomainContext::new(&db, question);
        let empty = WhereHistory::new();
        for slot in structure.slots().iter().filter(|s| history_operator(&structure, s.id).is_some()) {
            let count = |c: &Constant| -> Option<usize> {
                let q = structure.with_value(slot.id, c.clone()).ok()?.instantiate().ok()?;
                execute(&q, &db).ok().map(|r| r.len())
            };
            let domain = candidate_domain(slot.id, &structure, &ctx, &empty);
            for tried in &domain {
                let Some(observed) = count(tried) else { continue };
                let h = sqlmend_core::mutate::update_history(&empty, &structure, slot.id, tried, observed, expected);
                let Some(bounds) = h.bounds(slot.id) else { continue };
                for x in &domain {
                    let Constant::Literal(v) = x else { continue };
                    if v.as_f64().is_none_or(|f| bounds.admits(f)) || x == tried {
                        continue;
                    }
                    let n = count(x).ok_or_else(|| format!("`{text}`: pruned value {x} does not execute"))?;
                    let sound = if observed < expected { n <= observed } else { n >= observed };
                    if !sound {
                        return Err(format!(
                            "`{text}`: trying {tried} gave {observed} rows (want {expected}) but pruned {x} gives {n}"
                        ));
                    }
                    pruned += 1;
                }
            }
        }
    }
    Ok(format!("{joins_checked} excluded joins are empty; {pruned} history-pruned constants move away from the target"))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sqlmend")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!("sqlmend {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn criterion8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tasks = dir.path().join("tasks.json");
    let golds = seed_dir().join("golds.json");
    let seed = seed_dir();
    cli(&["gen-corpus", golds.to_str().unwrap(), "--count", "200", "--seed", "1", "--out", tasks.to_str().unwrap()])?;
    let run = || cli(&["repair", tasks.to_str().unwrap(), "--db-root", seed.to_str().unwrap(), "--max-mut", "1"]);
    let (a, b) = (run()?, run()?);
    let report: serde_json::Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    let k1 = &report["summary"]["k1_pct"];
    let detail = format!("two CLI runs produced {} and {} bytes, k1 cumulative {k1}%", a.len(), b.len());
    if a == b && !a.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion9(summaries: &[Summary]) -> Outcome {
    if let Some(s) = summaries.iter().find(|s| !monotone(s)) {
        return Err(format!("non-monotone corpus summary {:?}", s.cumulative()));
    }
    let stages = [Stage::Base, Stage::Beam, Stage::K1, Stage::K2, Stage::Fallback, Stage::Unsolved, Stage::Error];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let picks: Vec<Stage> = (0..rng.gen_range(0..50)).map(|_| stages[rng.gen_range(0..stages.len())]).collect();
        let s = Summary::from_stages(picks);
        if !monotone(&s) {
            return Err(format!("non-monotone random summary {:?}", s.cumulative()));
        }
    }
    Ok(format!("{} corpus summaries and 1000 random stage mixes are monotone", summaries.len()))
}

fn main() {
    let mut summaries = Vec::new();
    let results: Vec<(usize, Outcome)> = vec![
        (1, criterion1(&mut summaries)),
        (2, criterion2(&mut summaries)),
        (3, criterion3()),
        (4, criterion4()),
        (5, criterion5()),
        (6, criterion6()),
        (7, criterion7()),
        (8, criterion8()),
        (9, criterion9(&summaries)),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(d) => println!("criterion {n} PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
