use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::exec::Database;
use crate::mutate::{column_type, level, question_literals};
use crate::sql::{parse_with_holes, AggArg, AggFunc, CmpOp, Constant, Expr, ParseError, Query};
use crate::sql::sites::{for_each_constant, Role, ValueKind};
use crate::value::{CellKey, Value};

pub const DEFAULT_FILL_CAP: usize = 10;

#[derive(Debug, Error)]
pub enum FillError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no candidate values for literal placeholder {0}")]
    EmptyPool(usize),
}

#[derive(Debug, Clone)]
struct Hole {
    depth: usize,
    target: Option<Expr>,
    op: Option<CmpOp>,
    limit: bool,
}

/// Fills the `?` / `<lit>` placeholders of `skeleton` from the question and
/// the database, best first, at most `cap` queries.
///
/// Per placeholder, values quoted or written as numbers in the question come
/// first, then column values the question mentions, then the remaining column
/// values by descending frequency. Fills are ranked by the sum of their
/// per-placeholder ranks, ties broken lexicographically. LIKE placeholders get
/// `%v%`; LIMIT draws on the question's positive integers and defaults to 1.
pub fn fill_terminals(skeleton: &str, question: &str, db: &Database, cap: usize) -> Result<Vec<Query>, FillError> {
    let (query, holes) = parse_with_holes(skeleton)?;
    if holes.is_empty() {
        return Ok(vec![query]);
    }
    let wanted: BTreeSet<usize> = holes.iter().copied().collect();
    let mut sites: BTreeMap<usize, Hole> = BTreeMap::new();
    let mut ordinal = 0;
    let mut walked = query.clone();
    for_each_constant(&mut walked, |site, c| {
        if c.kind() != ValueKind::Literal {
            return;
        }
        if wanted.contains(&ordinal) {
            let hole = match site.role {
                Role::Literal { target, op } => Hole { depth: site.depth, target: Some(target.clone()), op, limit: false },
                _ => Hole { depth: site.depth, target: None, op: None, limit: true },
            };
            sites.insert(ordinal, hole);
        }
        ordinal += 1;
    });

    let asked = question_literals(question);
    let mut pools = Vec::new();
    for (&ord, hole) in &sites {
        let mut pool = hole_pool(hole, &query, question, &asked, db);
        pool.truncate(cap.max(1));
        if pool.is_empty() {
            return Err(FillError::EmptyPool(ord));
        }
        pools.push((ord, pool));
    }

    let mut ranks: Vec<Vec<usize>> = vec![Vec::new()];
    for (_, pool) in &pools {
        ranks = ranks
            .into_iter()
            .flat_map(|prefix| {
                (0..pool.len()).map(move |r| {
                    let mut p = prefix.clone();
                    p.push(r);
                    p
                })
            })
            .collect();
    }
    ranks.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then_with(|| a.cmp(b)));
    ranks.truncate(cap);

    Ok(ranks
        .into_iter()
        .map(|choice| {
            let values: BTreeMap<usize, &Value> =
                pools.iter().zip(&choice).map(|((ord, pool), &r)| (*ord, &pool[r])).collect();
            let mut q = query.clone();
            let mut ordinal = 0;
            for_each_constant(&mut q, |_, mut c| {
                if c.kind() != ValueKind::Literal {
                    return;
                }
                if let Some(v) = values.get(&ordinal) {
                    c.set(&Constant::Literal((*v).clone())).expect("literal slot accepts a literal");
                }
                ordinal += 1;
            });
            q
        })
        .collect())
}

fn hole_pool(hole: &Hole, query: &Query, question: &str, asked: &[Value], db: &Database) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::new();
    let push = |out: &mut Vec<Value>, v: Value| {
        if !out.iter().any(|x| x.same_cell(&v) && x.is_numeric() == v.is_numeric()) {
            out.push(v);
        }
    };
    if hole.limit {
        for v in asked {
            if let Value::Int(n) = v {
                if *n > 0 {
                    push(&mut out, v.clone());
                }
            }
        }
        if out.is_empty() {
            out.push(Value::Int(1));
        }
        return out;
    }
    let like = hole.op == Some(CmpOp::Like);
    let wrap = |v: Value| -> Value {
        if !like {
            return v;
        }
        let text = match &v {
            Value::Text(s) => s.clone(),
            other => other.to_string(),
        };
        if text.contains('%') {
            Value::Text(text)
        } else {
            Value::Text(format!("%{text}%"))
        }
    };

    let scope: Vec<&str> = level(query, hole.depth).tables().collect();
    let column = match &hole.target {
        Some(Expr::Column(c)) => Some(c),
        Some(Expr::Aggregate { func: AggFunc::Min | AggFunc::Max, arg: AggArg::Column(c), .. }) => Some(c),
        _ => None,
    };
    let resolved = column.and_then(|c| column_type(db, &scope, c).map(|(t, ty)| (t, c.column.clone(), ty)));
    let numeric = match (&hole.target, &resolved) {
        _ if like => false,
        (_, Some((_, _, ty))) => ty.is_numeric(),
        (Some(Expr::Aggregate { .. }), None) => true,
        _ => false,
    };

    for v in asked {
        if like || v.is_numeric() == numeric {
            push(&mut out, wrap(v.clone()));
        }
    }

    if let Some((t, c, _)) = &resolved {
        let (Some(rel), Some((i, _))) = (db.table(t), db.schema().table(t).and_then(|d| d.column(c))) else {
            return out;
        };
        let mut freq: BTreeMap<CellKey, usize> = BTreeMap::new();
        for row in &rel.rows {
            if !row[i].is_null() {
                *freq.entry(CellKey(row[i].clone())).or_default() += 1;
            }
        }
        let lower = question.to_lowercase();
        let mentioned = |v: &Value| match v {
            Value::Text(s) => !s.is_empty() && lower.contains(&s.to_lowercase()),
            _ => false,
        };
        let mut values: Vec<(CellKey, usize)> = freq.into_iter().collect();
        // stable: equal keys keep ascending value order
        values.sort_by(|a, b| mentioned(&b.0 .0).cmp(&mentioned(&a.0 .0)).then(b.1.cmp(&a.1)));
        for (k, _) in values {
            push(&mut out, wrap(k.0));
        }
    }
    out
}
