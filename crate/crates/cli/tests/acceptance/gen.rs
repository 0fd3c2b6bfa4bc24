//! Random small databases and random queries inside the supported subset.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sqlmend_core::exec::{ColumnDef, ColumnType, Database, Relation, Schema, TableDef};
use sqlmend_core::sql::{
    AggArg, AggFunc, CmpOp, ColumnRef, Expr, Join, Operand, OrderItem, Predicate, Query, SetOp, SetOpKind, SortDir,
};
use sqlmend_core::Value;

const TEXTS: &[&str] = &["ab", "Ab", "b", "abc", "ba", "c_d", "zz"];
const REALS: &[f64] = &[0.5, 1.5, 2.0, -1.25, 3.0];
const PATTERNS: &[&str] = &["%b%", "a_", "%", "_b%", "AB%", "%c"];

fn cell(rng: &mut ChaCha8Rng, ty: ColumnType) -> Value {
    if rng.gen_bool(0.1) {
        return Value::Null;
    }
    match ty {
        ColumnType::Integer => Value::Int(rng.gen_range(-2..6)),
        ColumnType::Real => Value::Real(*REALS.choose(rng).unwrap()),
        ColumnType::Text => Value::Text(TEXTS.choose(rng).unwrap().to_string()),
    }
}

/// Two or three tables of at most 8 rows. Every table has an integer `k`;
/// other column names are unique to their table.
pub fn database(rng: &mut ChaCha8Rng) -> Database {
    let types = [ColumnType::Integer, ColumnType::Real, ColumnType::Text];
    let mut tables = Vec::new();
    let mut contents = BTreeMap::new();
    for t in 0..rng.gen_range(2..=3) {
        let name = format!("t{t}");
        let mut columns = vec![ColumnDef { name: "k".into(), ty: ColumnType::Integer }];
        for (i, letter) in ["x", "y", "z"].iter().enumerate().take(rng.gen_range(1..=3)) {
            let ty = if i == 0 { ColumnType::Text } else { *types.choose(rng).unwrap() };
            columns.push(ColumnDef { name: format!("{letter}{t}"), ty });
        }
        let rows: Vec<Vec<Value>> =
            (0..rng.gen_range(0..=8)).map(|_| columns.iter().map(|c| cell(rng, c.ty)).collect()).collect();
        let header = columns.iter().map(|c| c.name.clone()).collect();
        contents.insert(name.clone(), Relation::new(header, rows, false));
        tables.push(TableDef { name, columns });
    }
    Database::new(Schema { tables, foreign_keys: Vec::new() }, contents).expect("generated database is valid")
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Num,
    Text,
}

struct Scope {
    /// (table, column, class) for every visible column.
    cols: Vec<(String, String, Class)>,
    multi: bool,
}

impl Scope {
    fn new(db: &Database, tables: &[String]) -> Scope {
        let mut cols = Vec::new();
        for t in tables {
            for c in &db.schema().table(t).unwrap().columns {
                let class = if c.ty == ColumnType::Text { Class::Text } else { Class::Num };
                cols.push((t.clone(), c.name.clone(), class));
            }
        }
        Scope { cols, multi: tables.len() > 1 }
    }

    fn reference(&self, rng: &mut ChaCha8Rng, i: usize) -> ColumnRef {
        let (t, c, _) = &self.cols[i];
        if (self.multi && c == "k") || rng.gen_bool(0.3) {
            ColumnRef::qualified(t.clone(), c.clone())
        } else {
            ColumnRef::new(c.clone())
        }
    }

    fn any(&self, rng: &mut ChaCha8Rng) -> (ColumnRef, Class) {
        let i = rng.gen_range(0..self.cols.len());
        (self.reference(rng, i), self.cols[i].2)
    }

    fn of(&self, rng: &mut ChaCha8Rng, class: Class) -> Option<ColumnRef> {
        let idx: Vec<usize> = (0..self.cols.len()).filter(|&i| self.cols[i].2 == class).collect();
        let i = *idx.choose(rng)?;
        Some(self.reference(rng, i))
    }
}

fn literal(rng: &mut ChaCha8Rng, class: Class) -> Value {
    match class {
        Class::Num if rng.gen_bool(0.25) => Value::Real(*REALS.choose(rng).unwrap()),
        Class::Num => Value::Int(rng.gen_range(-2..7)),
        Class::Text => Value::Text(TEXTS.choose(rng).unwrap().to_string()),
    }
}

fn cmp_op(rng: &mut ChaCha8Rng) -> CmpOp {
    *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).unwrap()
}

fn atom(rng: &mut ChaCha8Rng, scope: &Scope) -> Predicate {
    let (col, class) = scope.any(rng);
    let left = Expr::Column(col);
    match rng.gen_range(0..10) {
        0..=4 => Predicate::Compare { left, op: cmp_op(rng), right: Operand::Literal(literal(rng, class)) },
        5 if class == Class::Text => Predicate::Compare {
            left,
            op: CmpOp::Like,
            right: Operand::Literal(Value::Text(PATTERNS.choose(rng).unwrap().to_string())),
        },
        5 | 6 => {
            let other = scope.of(rng, class).unwrap();
            Predicate::Compare { left, op: cmp_op(rng), right: Operand::Expr(Expr::Column(other)) }
        }
        7 => Predicate::Compare { left, op: CmpOp::Eq, right: Operand::Literal(Value::Null) },
        _ => {
            let mut list: Vec<Value> = (0..rng.gen_range(1..=3)).map(|_| literal(rng, class)).collect();
            if rng.gen_bool(0.2) {
                list.push(Value::Null);
            }
            Predicate::In { left, list }
        }
    }
}

fn predicate(rng: &mut ChaCha8Rng, scope: &Scope, depth: usize) -> Predicate {
    if depth == 0 || rng.gen_bool(0.5) {
        return atom(rng, scope);
    }
    match rng.gen_range(0..3) {
        0 => Predicate::and(predicate(rng, scope, depth - 1), predicate(rng, scope, depth - 1)),
        1 => Predicate::or(predicate(rng, scope, depth - 1), predicate(rng, scope, depth - 1)),
        _ => Predicate::not(predicate(rng, scope, depth - 1)),
    }
}

fn aggregate(rng: &mut ChaCha8Rng, scope: &Scope) -> (Expr, Class) {
    let distinct = rng.gen_bool(0.2);
    match rng.gen_range(0..5) {
        0 => (Expr::Aggregate { func: AggFunc::Count, distinct: false, arg: AggArg::Star }, Class::Num),
        1 => {
            let (c, _) = scope.any(rng);
            (Expr::Aggregate { func: AggFunc::Count, distinct, arg: AggArg::Column(c) }, Class::Num)
        }
        2 => {
            let c = scope.of(rng, Class::Num).unwrap();
            let func = if rng.gen_bool(0.5) { AggFunc::Sum } else { AggFunc::Avg };
            (Expr::Aggregate { func, distinct, arg: AggArg::Column(c) }, Class::Num)
        }
        _ => {
            let (c, class) = scope.any(rng);
            let func = if rng.gen_bool(0.5) { AggFunc::Min } else { AggFunc::Max };
            (Expr::Aggregate { func, distinct, arg: AggArg::Column(c) }, class)
        }
    }
}

fn direction(rng: &mut ChaCha8Rng) -> SortDir {
    if rng.gen_bool(0.5) {
        SortDir::Asc
    } else {
        SortDir::Desc
    }
}

fn arity(q: &Query, db: &Database) -> usize {
    let star: usize = q.tables().map(|t| db.schema().table(t).unwrap().columns.len()).sum();
    q.select.iter().map(|e| if *e == Expr::Star { star } else { 1 }).sum()
}

/// A random query that the evaluator must accept.
pub fn query(rng: &mut ChaCha8Rng, db: &Database) -> Query {
    let mut q = body(rng, db);
    if rng.gen_bool(0.2) {
        let n = arity(&q, db);
        let t = db.schema().tables.choose(rng).unwrap().name.clone();
        let scope = Scope::new(db, std::slice::from_ref(&t));
        let select = (0..n).map(|_| Expr::Column(scope.any(rng).0)).collect();
        let mut right = Query::simple(select, t);
        if rng.gen_bool(0.5) {
            right.where_clause = Some(predicate(rng, &scope, 1));
        }
        let kind = *[SetOpKind::Union, SetOpKind::Except, SetOpKind::Intersect].choose(rng).unwrap();
        q.set_op = Some(SetOp { kind, query: Box::new(right) });
    }
    q
}

fn body(rng: &mut ChaCha8Rng, db: &Database) -> Query {
    let mut names: Vec<String> = db.schema().tables.iter().map(|t| t.name.clone()).collect();
    names.shuffle(rng);
    let from_n = if rng.gen_bool(0.2) { 2 } else { 1 };
    let join_n = if names.len() > from_n && rng.gen_bool(0.4) { 1 } else { 0 };
    let from: Vec<String> = names[..from_n].to_vec();
    let mut joins = Vec::new();
    if join_n == 1 {
        let t = names[from_n].clone();
        let other = from.choose(rng).unwrap().clone();
        let left = ColumnRef::qualified(t.clone(), "k");
        let right = ColumnRef::qualified(other, "k");
        joins.push(if rng.gen_bool(0.5) { Join { table: t, left, right } } else { Join { table: t, left: right, right: left } });
    }
    let in_scope: Vec<String> = names[..from_n + join_n].to_vec();
    let scope = Scope::new(db, &in_scope);

    let mut q = Query::simple(Vec::new(), from[0].clone());
    q.from = from;
    q.joins = joins;
    if rng.gen_bool(0.6) {
        q.where_clause = Some(predicate(rng, &scope, 2));
    }

    match rng.gen_range(0..10) {
        0..=3 => {
            let group: Vec<ColumnRef> = (0..rng.gen_range(1..=2)).map(|_| scope.any(rng).0).collect();
            q.select = group.iter().cloned().map(Expr::Column).collect();
            for _ in 0..rng.gen_range(0..=2) {
                q.select.push(aggregate(rng, &scope).0);
            }
            if rng.gen_bool(0.2) {
                q.select.push(Expr::Column(scope.any(rng).0));
            }
            if rng.gen_bool(0.4) {
                let (agg, class) = aggregate(rng, &scope);
                q.having = Some(Predicate::Compare { left: agg, op: cmp_op(rng), right: Operand::Literal(literal(rng, class)) });
            }
            for _ in 0..rng.gen_range(0..=2) {
                let expr = if rng.gen_bool(0.5) {
                    Expr::Column(group.choose(rng).unwrap().clone())
                } else {
                    aggregate(rng, &scope).0
                };
                q.order_by.push(OrderItem { expr, dir: direction(rng) });
            }
            q.group_by = group;
        }
        4 => {
            q.select = (0..rng.gen_range(1..=3)).map(|_| aggregate(rng, &scope).0).collect();
            if rng.gen_bool(0.3) {
                let (agg, class) = aggregate(rng, &scope);
                q.having = Some(Predicate::Compare { left: agg, op: cmp_op(rng), right: Operand::Literal(literal(rng, class)) });
            }
        }
        5 => {
            q.select = vec![Expr::Star];
        }
        _ => {
            q.select = (0..rng.gen_range(1..=3)).map(|_| Expr::Column(scope.any(rng).0)).collect();
        }
    }
    if q.group_by.is_empty() && q.having.is_none() && !q.select.iter().any(Expr::is_aggregate) {
        for _ in 0..rng.gen_range(0..=2) {
            q.order_by.push(OrderItem { expr: Expr::Column(scope.any(rng).0), dir: direction(rng) });
        }
    }
    q.distinct = rng.gen_bool(0.25);
    if rng.gen_bool(0.25) {
        q.limit = Some(rng.gen_range(1..5));
    }
    q
}
