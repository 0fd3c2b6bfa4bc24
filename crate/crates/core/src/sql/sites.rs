//! Constant sites: the single left-to-right traversal over every constant
//! position of a query. Printing, placeholder extraction, instantiation and
//! mutation domains all go through [`walk`], so they agree on slot order.

use serde::{Deserialize, Serialize};

use super::ast::{AggArg, AggFunc, CmpOp, ColumnRef, Expr, Operand, Predicate, Query, SortDir};
use crate::value::Value;

/// Keyword families a constant can sit under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeywordContext {
    /// SELECT, GROUP BY, ORDER BY.
    SelectGroupOrder = 1,
    From = 2,
    Join = 3,
    /// WHERE, HAVING (and the WHERE of an EXCEPT arm).
    WhereExceptHaving = 4,
    Limit = 5,
}

impl KeywordContext {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn admits(self, kind: ValueKind) -> bool {
        use ValueKind::*;
        match self {
            KeywordContext::SelectGroupOrder => matches!(kind, Column | Aggregate | Direction),
            KeywordContext::From => kind == Table,
            KeywordContext::Join => matches!(kind, Table | Column),
            KeywordContext::WhereExceptHaving => matches!(kind, Column | Aggregate | Literal | Operator),
            KeywordContext::Limit => kind == Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Column,
    Aggregate,
    Table,
    Literal,
    Operator,
    Direction,
}

/// Clause a constant belongs to, in source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    Select,
    From,
    Join,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
}

impl Clause {
    pub fn context(self) -> KeywordContext {
        match self {
            Clause::Select | Clause::GroupBy | Clause::OrderBy => KeywordContext::SelectGroupOrder,
            Clause::From => KeywordContext::From,
            Clause::Join => KeywordContext::Join,
            Clause::Where | Clause::Having => KeywordContext::WhereExceptHaving,
            Clause::Limit => KeywordContext::Limit,
        }
    }
}

/// An owned constant value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Constant {
    Table(String),
    Column(ColumnRef),
    Aggregate(AggFunc),
    Literal(Value),
    Operator(CmpOp),
    Direction(SortDir),
}

impl Constant {
    pub fn kind(&self) -> ValueKind {
        match self {
            Constant::Table(_) => ValueKind::Table,
            Constant::Column(_) => ValueKind::Column,
            Constant::Aggregate(_) => ValueKind::Aggregate,
            Constant::Literal(_) => ValueKind::Literal,
            Constant::Operator(_) => ValueKind::Operator,
            Constant::Direction(_) => ValueKind::Direction,
        }
    }
}

impl std::fmt::Display for Constant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constant::Table(t) => f.write_str(t),
            Constant::Column(c) => write!(f, "{c}"),
            Constant::Aggregate(a) => f.write_str(a.name()),
            Constant::Literal(v) => write!(f, "{v}"),
            Constant::Operator(o) => f.write_str(o.symbol()),
            Constant::Direction(d) => f.write_str(d.keyword()),
        }
    }
}

/// Mutable handle on one constant position inside a query.
#[derive(Debug)]
pub enum ConstantMut<'a> {
    Table(&'a mut String),
    Column(&'a mut ColumnRef),
    Aggregate(&'a mut AggFunc),
    Literal(&'a mut Value),
    Limit(&'a mut u64),
    Operator(&'a mut CmpOp),
    Direction(&'a mut SortDir),
}

/// The value given could not be stored in this position.
#[derive(Debug, Clone, PartialEq)]
pub struct KindMismatch {
    pub expected: ValueKind,
    pub found: Constant,
}

impl ConstantMut<'_> {
    pub fn kind(&self) -> ValueKind {
        match self {
            ConstantMut::Table(_) => ValueKind::Table,
            ConstantMut::Column(_) => ValueKind::Column,
            ConstantMut::Aggregate(_) => ValueKind::Aggregate,
            ConstantMut::Literal(_) | ConstantMut::Limit(_) => ValueKind::Literal,
            ConstantMut::Operator(_) => ValueKind::Operator,
            ConstantMut::Direction(_) => ValueKind::Direction,
        }
    }

    pub fn get(&self) -> Constant {
        match self {
            ConstantMut::Table(t) => Constant::Table((**t).clone()),
            ConstantMut::Column(c) => Constant::Column((**c).clone()),
            ConstantMut::Aggregate(a) => Constant::Aggregate(**a),
            ConstantMut::Literal(v) => Constant::Literal((**v).clone()),
            ConstantMut::Limit(n) => Constant::Literal(Value::Int(**n as i64)),
            ConstantMut::Operator(o) => Constant::Operator(**o),
            ConstantMut::Direction(d) => Constant::Direction(**d),
        }
    }

    pub fn set(&mut self, value: &Constant) -> Result<(), KindMismatch> {
        match (self, value) {
            (ConstantMut::Table(t), Constant::Table(v)) if !v.is_empty() => **t = v.clone(),
            (ConstantMut::Column(c), Constant::Column(v)) if !v.column.is_empty() => **c = v.clone(),
            (ConstantMut::Aggregate(a), Constant::Aggregate(v)) => **a = *v,
            (ConstantMut::Literal(l), Constant::Literal(v)) => **l = v.clone(),
            (ConstantMut::Limit(n), Constant::Literal(Value::Int(v))) if *v >= 1 => **n = *v as u64,
            (ConstantMut::Operator(o), Constant::Operator(v)) => **o = *v,
            (ConstantMut::Direction(d), Constant::Direction(v)) => **d = *v,
            (this, found) => {
                return Err(KindMismatch { expected: this.kind(), found: found.clone() });
            }
        }
        Ok(())
    }

    /// Replaces the value by the kind's neutral placeholder.
    pub fn blank(&mut self) {
        match self {
            ConstantMut::Table(t) => t.clear(),
            ConstantMut::Column(c) => **c = ColumnRef { table: None, column: String::new() },
            ConstantMut::Aggregate(a) => **a = AggFunc::Count,
            ConstantMut::Literal(v) => **v = Value::Null,
            ConstantMut::Limit(n) => **n = 1,
            ConstantMut::Operator(o) => **o = CmpOp::Eq,
            ConstantMut::Direction(d) => **d = SortDir::Asc,
        }
    }

    pub(crate) fn render(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            ConstantMut::Table(t) => out.push_str(t),
            ConstantMut::Column(c) => {
                let _ = write!(out, "{c}");
            }
            ConstantMut::Aggregate(a) => out.push_str(a.name()),
            ConstantMut::Literal(v) => {
                let _ = write!(out, "{v}");
            }
            ConstantMut::Limit(n) => {
                let _ = write!(out, "{n}");
            }
            ConstantMut::Operator(o) => out.push_str(o.symbol()),
            ConstantMut::Direction(d) => out.push_str(d.keyword()),
        }
    }
}

/// What sits next to a column reference, for type-directed pruning.
#[derive(Debug, Clone, Copy)]
pub enum Counterpart<'a> {
    None,
    Literal(&'a Value),
    Column(&'a ColumnRef),
    Expr(&'a Expr),
    List(&'a [Value]),
    /// The column is the argument of this aggregate.
    AggregateArg(AggFunc),
}

/// Local neighbourhood of a constant, borrowed from the query being walked.
#[derive(Debug, Clone, Copy)]
pub enum Role<'a> {
    TableFrom,
    /// Table of the join at this index.
    TableJoin(usize),
    Column(Counterpart<'a>),
    Aggregate { arg: &'a AggArg },
    /// Literal compared against `target` with `op` (`None` for IN lists).
    Literal { target: &'a Expr, op: Option<CmpOp> },
    Limit,
    Operator { left: &'a Expr, right: &'a Operand },
    Direction,
}

#[derive(Debug, Clone, Copy)]
pub struct Site<'a> {
    pub clause: Clause,
    /// 0 for the outer query, 1 for a set-operation arm.
    pub depth: usize,
    /// True when the site lies under an odd number of NOTs.
    pub negated: bool,
    pub role: Role<'a>,
}

impl Site<'_> {
    pub fn context(&self) -> KeywordContext {
        self.clause.context()
    }
}

pub(crate) trait Sink {
    fn text(&mut self, _s: &str) {}
    fn constant(&mut self, site: &Site<'_>, value: ConstantMut<'_>);
}

impl<F: FnMut(&Site<'_>, ConstantMut<'_>)> Sink for F {
    fn constant(&mut self, site: &Site<'_>, value: ConstantMut<'_>) {
        self(site, value)
    }
}

/// Visits every constant of `query` in source order.
pub fn for_each_constant(query: &mut Query, mut f: impl FnMut(&Site<'_>, ConstantMut<'_>)) {
    walk(query, &mut f);
}

pub(crate) fn walk(query: &mut Query, sink: &mut impl Sink) {
    walk_query(query, 0, sink);
}

fn site(clause: Clause, depth: usize, role: Role<'_>) -> Site<'_> {
    Site { clause, depth, negated: false, role }
}

fn walk_query(q: &mut Query, depth: usize, sink: &mut impl Sink) {
    let Query { distinct, select, from, joins, where_clause, group_by, having, order_by, limit, set_op } = q;
    sink.text("SELECT ");
    if *distinct {
        sink.text("DISTINCT ");
    }
    for (i, e) in select.iter_mut().enumerate() {
        if i > 0 {
            sink.text(", ");
        }
        walk_expr(e, Clause::Select, depth, false, Counterpart::None, sink);
    }
    sink.text(" FROM ");
    for (i, t) in from.iter_mut().enumerate() {
        if i > 0 {
            sink.text(", ");
        }
        sink.constant(&site(Clause::From, depth, Role::TableFrom), ConstantMut::Table(t));
    }
    for (i, j) in joins.iter_mut().enumerate() {
        sink.text(" JOIN ");
        sink.constant(&site(Clause::Join, depth, Role::TableJoin(i)), ConstantMut::Table(&mut j.table));
        sink.text(" ON ");
        let (left, right) = (&mut j.left, &mut j.right);
        sink.constant(&site(Clause::Join, depth, Role::Column(Counterpart::Column(right))), ConstantMut::Column(left));
        sink.text(" = ");
        sink.constant(&site(Clause::Join, depth, Role::Column(Counterpart::Column(left))), ConstantMut::Column(right));
    }
    if let Some(p) = where_clause {
        sink.text(" WHERE ");
        walk_pred(p, Clause::Where, depth, false, sink);
    }
    if !group_by.is_empty() {
        sink.text(" GROUP BY ");
        for (i, c) in group_by.iter_mut().enumerate() {
            if i > 0 {
                sink.text(", ");
            }
            sink.constant(&site(Clause::GroupBy, depth, Role::Column(Counterpart::None)), ConstantMut::Column(c));
        }
    }
    if let Some(p) = having {
        sink.text(" HAVING ");
        walk_pred(p, Clause::Having, depth, false, sink);
    }
    if !order_by.is_empty() {
        sink.text(" ORDER BY ");
        for (i, item) in order_by.iter_mut().enumerate() {
            if i > 0 {
                sink.text(", ");
            }
            walk_expr(&mut item.expr, Clause::OrderBy, depth, false, Counterpart::None, sink);
            sink.text(" ");
            sink.constant(&site(Clause::OrderBy, depth, Role::Direction), ConstantMut::Direction(&mut item.dir));
        }
    }
    if let Some(n) = limit {
        sink.text(" LIMIT ");
        sink.constant(&site(Clause::Limit, depth, Role::Limit), ConstantMut::Limit(n));
    }
    if let Some(op) = set_op {
        sink.text(" ");
        sink.text(op.kind.keyword());
        sink.text(" ");
        walk_query(&mut op.query, depth + 1, sink);
    }
}

fn walk_expr(
    e: &mut Expr,
    clause: Clause,
    depth: usize,
    negated: bool,
    counterpart: Counterpart<'_>,
    sink: &mut impl Sink,
) {
    match e {
        Expr::Star => sink.text("*"),
        Expr::Column(c) => {
            let s = Site { clause, depth, negated, role: Role::Column(counterpart) };
            sink.constant(&s, ConstantMut::Column(c));
        }
        Expr::Aggregate { func, distinct, arg } => {
            let s = Site { clause, depth, negated, role: Role::Aggregate { arg } };
            sink.constant(&s, ConstantMut::Aggregate(func));
            sink.text("(");
            if *distinct {
                sink.text("DISTINCT ");
            }
            match arg {
                AggArg::Star => sink.text("*"),
                AggArg::Column(c) => {
                    let s = Site { clause, depth, negated, role: Role::Column(Counterpart::AggregateArg(*func)) };
                    sink.constant(&s, ConstantMut::Column(c));
                }
            }
            sink.text(")");
        }
    }
}

fn precedence(p: &Predicate) -> u8 {
    match p {
        Predicate::Or(..) => 1,
        Predicate::And(..) => 2,
        Predicate::Not(_) => 3,
        Predicate::Compare { .. } | Predicate::In { .. } => 4,
    }
}

fn walk_child(p: &mut Predicate, parens: bool, clause: Clause, depth: usize, negated: bool, sink: &mut impl Sink) {
    if parens {
        sink.text("(");
    }
    walk_pred(p, clause, depth, negated, sink);
    if parens {
        sink.text(")");
    }
}

fn walk_pred(p: &mut Predicate, clause: Clause, depth: usize, negated: bool, sink: &mut impl Sink) {
    let prec = precedence(p);
    match p {
        Predicate::And(a, b) | Predicate::Or(a, b) => {
            let kw = if prec == 1 { " OR " } else { " AND " };
            let lp = precedence(a) < prec;
            let rp = precedence(b) <= prec;
            walk_child(a, lp, clause, depth, negated, sink);
            sink.text(kw);
            walk_child(b, rp, clause, depth, negated, sink);
        }
        Predicate::Not(inner) => {
            sink.text("NOT ");
            let parens = precedence(inner) < 3;
            walk_child(inner, parens, clause, depth, !negated, sink);
        }
        Predicate::Compare { left, op, right } => {
            walk_expr(left, clause, depth, negated, Counterpart::from_operand(right), sink);
            sink.text(" ");
            let s = Site { clause, depth, negated, role: Role::Operator { left, right } };
            sink.constant(&s, ConstantMut::Operator(op));
            sink.text(" ");
            match right {
                Operand::Literal(v) => {
                    let s = Site { clause, depth, negated, role: Role::Literal { target: left, op: Some(*op) } };
                    sink.constant(&s, ConstantMut::Literal(v));
                }
                Operand::Expr(e) => {
                    walk_expr(e, clause, depth, negated, Counterpart::Expr(left), sink);
                }
            }
        }
        Predicate::In { left, list } => {
            walk_expr(left, clause, depth, negated, Counterpart::List(list), sink);
            sink.text(" IN (");
            for (i, v) in list.iter_mut().enumerate() {
                if i > 0 {
                    sink.text(", ");
                }
                let s = Site { clause, depth, negated, role: Role::Literal { target: left, op: None } };
                sink.constant(&s, ConstantMut::Literal(v));
            }
            sink.text(")");
        }
    }
}

impl<'a> Counterpart<'a> {
    fn from_operand(op: &'a Operand) -> Counterpart<'a> {
        match op {
            Operand::Literal(v) => Counterpart::Literal(v),
            Operand::Expr(Expr::Column(c)) => Counterpart::Column(c),
            Operand::Expr(e) => Counterpart::Expr(e),
        }
    }
}
