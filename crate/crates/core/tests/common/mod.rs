//! Shared generators and fixture paths for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use sqlmend_core::exec::Database;
use sqlmend_core::sql::{
    AggArg, AggFunc, CmpOp, ColumnRef, Expr, Join, Operand, OrderItem, Predicate, Query, SetOp, SetOpKind, SortDir,
};
use sqlmend_core::Value;

pub fn seed_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/seed")
}

pub fn seed_db(name: &str) -> Database {
    Database::load_dir(seed_dir().join(name)).unwrap()
}

const TABLES: &[&str] = &["t", "u", "orders", "v2"];
const COLUMNS: &[&str] = &["a", "b", "name", "alid", "x_1"];

fn ident(pool: &'static [&'static str]) -> impl Strategy<Value = String> {
    prop::sample::select(pool).prop_map(str::to_string)
}

fn column_ref() -> impl Strategy<Value = ColumnRef> {
    (prop::option::of(ident(TABLES)), ident(COLUMNS)).prop_map(|(table, column)| ColumnRef { table, column })
}

pub fn literal() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-50i64..5000).prop_map(Value::Int),
        (-40i64..400).prop_map(|n| Value::Real(n as f64 / 4.0 + 0.25)),
        "[a-zA-Z' %_]{0,8}".prop_map(Value::Text),
    ]
}

fn agg_func() -> impl Strategy<Value = AggFunc> {
    prop::sample::select(AggFunc::ALL.to_vec())
}

fn expr() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => column_ref().prop_map(Expr::Column),
        1 => (agg_func(), any::<bool>(), column_ref())
            .prop_map(|(func, distinct, c)| Expr::Aggregate { func, distinct, arg: AggArg::Column(c) }),
        1 => Just(Expr::Aggregate { func: AggFunc::Count, distinct: false, arg: AggArg::Star }),
    ]
}

fn op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Like])
}

fn predicate() -> impl Strategy<Value = Predicate> {
    let leaf = prop_oneof![
        (expr(), op(), literal()).prop_map(|(left, op, v)| Predicate::Compare { left, op, right: Operand::Literal(v) }),
        (expr(), op(), expr()).prop_map(|(left, op, e)| Predicate::Compare { left, op, right: Operand::Expr(e) }),
        (expr(), prop::collection::vec(literal(), 1..4)).prop_map(|(left, list)| Predicate::In { left, list }),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Predicate::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Predicate::or(a, b)),
            inner.prop_map(Predicate::not),
        ]
    })
}

fn select_list() -> impl Strategy<Value = Vec<Expr>> {
    prop_oneof![
        1 => Just(vec![Expr::Star]),
        4 => prop::collection::vec(expr(), 1..4),
    ]
}

fn simple_query() -> impl Strategy<Value = Query> {
    (
        any::<bool>(),
        select_list(),
        prop::collection::vec(ident(TABLES), 1..3),
        prop::collection::vec((ident(TABLES), column_ref(), column_ref()), 0..2),
        prop::option::of(predicate()),
        prop::collection::vec(column_ref(), 0..3),
        prop::option::weighted(0.3, predicate()),
        prop::collection::vec((expr(), prop::sample::select(vec![SortDir::Asc, SortDir::Desc])), 0..3),
        prop::option::of(1u64..100),
    )
        .prop_map(|(distinct, select, from, joins, where_clause, group_by, having, order, limit)| Query {
            distinct,
            select,
            from,
            joins: joins.into_iter().map(|(table, left, right)| Join { table, left, right }).collect(),
            where_clause,
            group_by,
            having,
            order_by: order.into_iter().map(|(expr, dir)| OrderItem { expr, dir }).collect(),
            limit,
            set_op: None,
        })
}

/// Syntactically arbitrary queries of the subset (not necessarily executable).
pub fn any_query() -> impl Strategy<Value = Query> {
    (
        simple_query(),
        prop::option::weighted(0.3, (prop::sample::select(vec![SetOpKind::Except, SetOpKind::Union, SetOpKind::Intersect]), simple_query())),
    )
        .prop_map(|(mut q, tail)| {
            q.set_op = tail.map(|(kind, arm)| SetOp { kind, query: Box::new(arm) });
            q
        })
}
