//! Reference implementations used only for cross-checking: a naive
//! nested-loop evaluator, a textbook edit distance and a brute-force
//! multiset Jaccard.

use std::cmp::Ordering;

use sqlmend_core::exec::Database;
use sqlmend_core::sql::{AggArg, AggFunc, CmpOp, ColumnRef, Expr, Operand, Predicate, Query, SetOpKind, SortDir};
use sqlmend_core::Value;

/// Full-matrix Wagner-Fischer over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in m[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

fn cell_token(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Int(i) => format!("num:{}", *i as f64),
        Value::Real(r) => format!("num:{}", if *r == 0.0 { 0.0 } else { *r }),
        Value::Text(s) => format!("text:{s}"),
    }
}

/// `|m ∩ u| / |m ∪ u|` by pairing off equal cells one at a time.
pub fn jaccard(m: &[Value], u: &[Value]) -> f64 {
    let mut rest: Vec<String> = u.iter().map(cell_token).collect();
    let mut inter = 0usize;
    for t in m.iter().map(cell_token) {
        if let Some(pos) = rest.iter().position(|x| *x == t) {
            rest.remove(pos);
            inter += 1;
        }
    }
    let union = m.len() + u.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Rows of a query result with the metadata the evaluator reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

/// One joined row: (table name, column names, values) per table in scope.
type Env<'a> = Vec<(&'a str, Vec<&'a str>, &'a [Value])>;

fn cmp(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        (Value::Null, _) => Ordering::Less,
        (_, Value::Null) => Ordering::Greater,
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        (Value::Text(_), _) => Ordering::Greater,
        (_, Value::Text(_)) => Ordering::Less,
        (x, y) => x.as_f64().unwrap().partial_cmp(&y.as_f64().unwrap()).unwrap(),
    }
}

fn eq(a: &Value, b: &Value) -> bool {
    cmp(a, b) == Ordering::Equal
}

fn lookup<'a>(env: &Env<'a>, c: &ColumnRef) -> Value {
    for (t, cols, vals) in env {
        if c.table.as_deref().is_some_and(|q| q != *t) {
            continue;
        }
        if let Some(i) = cols.iter().position(|n| *n == c.column) {
            return vals[i].clone();
        }
    }
    panic!("oracle: unresolved column {c}")
}

fn like(text: &str, pat: &str) -> bool {
    fn go(t: &[char], p: &[char]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some('%') => (0..=t.len()).any(|k| go(&t[k..], &p[1..])),
            Some('_') => !t.is_empty() && go(&t[1..], &p[1..]),
            Some(c) => t.first() == Some(c) && go(&t[1..], &p[1..]),
        }
    }
    let t: Vec<char> = text.to_lowercase().chars().collect();
    let p: Vec<char> = pat.to_lowercase().chars().collect();
    go(&t, &p)
}

fn aggregate(func: AggFunc, distinct: bool, arg: &AggArg, group: &[Env<'_>]) -> Value {
    let AggArg::Column(c) = arg else {
        return Value::Int(group.len() as i64);
    };
    let mut vals: Vec<Value> = group.iter().map(|e| lookup(e, c)).filter(|v| !v.is_null()).collect();
    if distinct {
        let mut uniq: Vec<Value> = Vec::new();
        for v in vals {
            if !uniq.iter().any(|u| eq(u, &v)) {
                uniq.push(v);
            }
        }
        vals = uniq;
    }
    if func == AggFunc::Count {
        return Value::Int(vals.len() as i64);
    }
    if vals.is_empty() {
        return Value::Null;
    }
    match func {
        AggFunc::Sum if vals.iter().all(|v| matches!(v, Value::Int(_))) => {
            Value::Int(vals.iter().map(|v| if let Value::Int(i) = v { *i } else { 0 }).sum())
        }
        AggFunc::Sum => Value::Real(vals.iter().map(|v| v.as_f64().unwrap()).sum()),
        AggFunc::Avg => Value::Real(vals.iter().map(|v| v.as_f64().unwrap()).sum::<f64>() / vals.len() as f64),
        AggFunc::Min => {
            let mut best = vals[0].clone();
            for v in &vals[1..] {
                if cmp(v, &best) == Ordering::Less {
                    best = v.clone();
                }
            }
            best
        }
        AggFunc::Max => {
            let mut best = vals[0].clone();
            for v in &vals[1..] {
                if cmp(v, &best) == Ordering::Greater {
                    best = v.clone();
                }
            }
            best
        }
        AggFunc::Count => unreachable!(),
    }
}

/// Value of an expression for a group of rows (a single row when ungrouped).
fn value(e: &Expr, group: &[Env<'_>]) -> Value {
    match e {
        Expr::Column(c) => group.first().map_or(Value::Null, |env| lookup(env, c)),
        Expr::Aggregate { func, distinct, arg } => aggregate(*func, *distinct, arg, group),
        Expr::Star => panic!("oracle: star outside SELECT"),
    }
}

fn truth(p: &Predicate, group: &[Env<'_>]) -> Option<bool> {
    match p {
        Predicate::Compare { left, op, right } => {
            let l = value(left, group);
            let r = match right {
                Operand::Literal(v) => v.clone(),
                Operand::Expr(e) => value(e, group),
            };
            if l.is_null() || r.is_null() {
                return None;
            }
            Some(match op {
                CmpOp::Like => like(l.as_text()?, r.as_text()?),
                CmpOp::Eq => cmp(&l, &r) == Ordering::Equal,
                CmpOp::Ne => cmp(&l, &r) != Ordering::Equal,
                CmpOp::Lt => cmp(&l, &r) == Ordering::Less,
                CmpOp::Le => cmp(&l, &r) != Ordering::Greater,
                CmpOp::Gt => cmp(&l, &r) == Ordering::Greater,
                CmpOp::Ge => cmp(&l, &r) != Ordering::Less,
            })
        }
        Predicate::In { left, list } => {
            let l = value(left, group);
            if l.is_null() {
                None
            } else if list.iter().any(|v| !v.is_null() && eq(v, &l)) {
                Some(true)
            } else if list.iter().any(Value::is_null) {
                None
            } else {
                Some(false)
            }
        }
        Predicate::And(a, b) => match (truth(a, group), truth(b, group)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Predicate::Or(a, b) => match (truth(a, group), truth(b, group)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Predicate::Not(a) => truth(a, group).map(|b| !b),
    }
}

fn same_row(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| eq(x, y))
}

/// Evaluates `q` by enumerating every combination of table rows.
pub fn evaluate(q: &Query, db: &Database) -> Table {
    let tables: Vec<&str> = q.from.iter().chain(q.joins.iter().map(|j| &j.table)).map(String::as_str).collect();
    let schema: Vec<Vec<&str>> =
        tables.iter().map(|t| db.schema().table(t).unwrap().columns.iter().map(|c| c.name.as_str()).collect()).collect();

    let mut envs: Vec<Env<'_>> = vec![Vec::new()];
    for (k, t) in tables.iter().enumerate() {
        let rel = db.table(t).unwrap();
        let mut next = Vec::new();
        for env in &envs {
            for row in &rel.rows {
                let mut e = env.clone();
                e.push((*t, schema[k].clone(), row.as_slice()));
                if k >= q.from.len() {
                    let j = &q.joins[k - q.from.len()];
                    let (a, b) = (lookup(&e, &j.left), lookup(&e, &j.right));
                    if a.is_null() || b.is_null() || !eq(&a, &b) {
                        continue;
                    }
                }
                next.push(e);
            }
        }
        envs = next;
    }
    envs.retain(|e| q.where_clause.as_ref().is_none_or(|p| truth(p, std::slice::from_ref(e)) == Some(true)));

    let has_agg = q.select.iter().any(Expr::is_aggregate) || q.order_by.iter().any(|o| o.expr.is_aggregate());
    let grouped = !q.group_by.is_empty() || has_agg || q.having.is_some();
    let groups: Vec<Vec<Env<'_>>> = if !grouped {
        envs.into_iter().map(|e| vec![e]).collect()
    } else if q.group_by.is_empty() {
        vec![envs]
    } else {
        let mut keys: Vec<Vec<Value>> = Vec::new();
        let mut groups: Vec<Vec<Env<'_>>> = Vec::new();
        for e in envs {
            let key: Vec<Value> = q.group_by.iter().map(|c| lookup(&e, c)).collect();
            match keys.iter().position(|k| same_row(k, &key)) {
                Some(g) => groups[g].push(e),
                None => {
                    keys.push(key);
                    groups.push(vec![e]);
                }
            }
        }
        groups
    };

    let mut columns = Vec::new();
    for e in &q.select {
        match e {
            Expr::Star => columns.extend(schema.iter().flatten().map(|s| s.to_string())),
            Expr::Column(c) => columns.push(c.column.clone()),
            agg => columns.push(agg.to_string()),
        }
    }

    let mut out: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
    for g in &groups {
        if let Some(h) = &q.having {
            if truth(h, g) != Some(true) {
                continue;
            }
        }
        let mut row = Vec::new();
        for e in &q.select {
            match e {
                Expr::Star => match g.first() {
                    Some(env) => env.iter().for_each(|(_, _, vals)| row.extend(vals.iter().cloned())),
                    None => row.extend(schema.iter().flatten().map(|_| Value::Null)),
                },
                e => row.push(value(e, g)),
            }
        }
        let keys = q.order_by.iter().map(|o| value(&o.expr, g)).collect();
        out.push((row, keys));
    }
    if q.distinct {
        let mut kept: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
        for r in out {
            if !kept.iter().any(|k| same_row(&k.0, &r.0)) {
                kept.push(r);
            }
        }
        out = kept;
    }
    // insertion sort: stable by construction
    let before = |a: &[Value], b: &[Value]| -> bool {
        for ((x, y), o) in a.iter().zip(b).zip(&q.order_by) {
            let c = cmp(x, y);
            let c = if o.dir == SortDir::Desc { c.reverse() } else { c };
            if c != Ordering::Equal {
                return c == Ordering::Less;
            }
        }
        false
    };
    let mut sorted: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
    for r in out {
        let at = sorted.iter().position(|s| before(&r.1, &s.1)).unwrap_or(sorted.len());
        sorted.insert(at, r);
    }
    let mut rows: Vec<Vec<Value>> = sorted.into_iter().map(|r| r.0).collect();
    if let Some(n) = q.limit {
        rows.truncate(n as usize);
    }

    if let Some(set) = &q.set_op {
        let right = evaluate(&set.query, db).rows;
        let candidates: Vec<Vec<Value>> = match set.kind {
            SetOpKind::Union => rows.iter().chain(&right).cloned().collect(),
            SetOpKind::Except => rows.iter().filter(|r| !right.iter().any(|x| same_row(x, r))).cloned().collect(),
            SetOpKind::Intersect => rows.iter().filter(|r| right.iter().any(|x| same_row(x, r))).cloned().collect(),
        };
        let mut uniq: Vec<Vec<Value>> = Vec::new();
        for r in candidates {
            if !uniq.iter().any(|u| same_row(u, &r)) {
                uniq.push(r);
            }
        }
        rows = uniq;
    }
    Table { columns, rows, ordered: !q.order_by.is_empty() }
}
