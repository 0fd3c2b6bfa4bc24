use crate::exec::{ColumnType, Database};
use crate::sql::ast::{AggArg, AggFunc, CmpOp, ColumnRef, Expr, Operand, Query, SortDir};
use crate::sql::sites::{for_each_constant, ConstantMut, Counterpart, Role, Site};
use crate::sql::structure::{Assignment, QueryStructure, SlotId};
use crate::sql::Constant;
use crate::value::Value;

use super::history::WhereHistory;

/// Largest LIMIT offered when the question mentions no bigger integer.
pub const DEFAULT_MAX_LIMIT: i64 = 10;
/// Question integers above this are not used to widen LIMIT or COUNT ranges.
const LIMIT_CEILING: i64 = 1000;

/// Read-only inputs shared by every domain computation of one task.
#[derive(Debug, Clone)]
pub struct DomainContext<'a> {
    pub db: &'a Database,
    /// Literals lexed from the task's question, in order of appearance.
    pub question_literals: Vec<Value>,
}

impl<'a> DomainContext<'a> {
    pub fn new(db: &'a Database, question: &str) -> Self {
        Self { db, question_literals: question_literals(question) }
    }

    /// Upper end of LIMIT and COUNT-threshold ranges.
    pub fn max_small_int(&self) -> i64 {
        self.question_literals
            .iter()
            .filter_map(|v| match v {
                Value::Int(i) if *i <= LIMIT_CEILING => Some(*i),
                _ => None,
            })
            .fold(DEFAULT_MAX_LIMIT, i64::max)
    }
}

/// Quoted spans (single or double quotes) and standalone numbers of `text`.
pub fn question_literals(text: &str) -> Vec<Value> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<Value> = Vec::new();
    let push = |v: Value, out: &mut Vec<Value>| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\'' || c == '"' {
            // an apostrophe inside a word is not a quote
            let inside_word = c == '\'' && i > 0 && chars[i - 1].is_alphanumeric();
            if !inside_word {
                if let Some(end) = chars[i + 1..].iter().position(|&d| d == c) {
                    let span: String = chars[i + 1..i + 1 + end].iter().collect();
                    if !span.is_empty() {
                        push(Value::Text(span), &mut out);
                    }
                    i += end + 2;
                    continue;
                }
            }
            i += 1;
        } else if c.is_ascii_digit() && (i == 0 || !(chars[i - 1].is_alphanumeric() || chars[i - 1] == '_')) {
            let start = if i > 0 && chars[i - 1] == '-' { i - 1 } else { i };
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j].is_alphabetic() || chars[j] == '_') {
                i = j;
                continue;
            }
            let token: String = chars[start..j].iter().collect();
            if let Ok(n) = token.parse::<i64>() {
                push(Value::Int(n), &mut out);
            } else if let Ok(r) = token.parse::<f64>() {
                push(Value::Real(r), &mut out);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Runs `f` on the site at traversal index `index` of `query`.
pub(crate) fn at_site<R>(query: &mut Query, index: usize, f: impl FnOnce(&Site<'_>, ConstantMut<'_>) -> R) -> Option<R> {
    let mut f = Some(f);
    let mut out = None;
    let mut i = 0;
    for_each_constant(query, |site, c| {
        if i == index {
            if let Some(f) = f.take() {
                out = Some(f(site, c));
            }
        }
        i += 1;
    });
    out
}

/// The query level (outer query or set-operation arm) at `depth`.
pub(crate) fn level(q: &Query, depth: usize) -> &Query {
    let mut cur = q;
    for _ in 0..depth {
        match &cur.set_op {
            Some(s) => cur = &s.query,
            None => break,
        }
    }
    cur
}

/// Resolves a column against the tables of one query level.
pub(crate) fn column_type(db: &Database, scope: &[&str], c: &ColumnRef) -> Option<(String, ColumnType)> {
    let mut found = None;
    for t in scope {
        if c.table.as_deref().is_some_and(|q| q != *t) {
            continue;
        }
        if let Some((_, def)) = db.schema().table(t).and_then(|d| d.column(&c.column)) {
            if found.is_some() {
                return None;
            }
            found = Some((t.to_string(), def.ty));
        }
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Number,
    Text,
}

fn class_of(ty: ColumnType) -> Class {
    if ty.is_numeric() {
        Class::Number
    } else {
        Class::Text
    }
}

fn expr_class(db: &Database, scope: &[&str], e: &Expr) -> Option<Class> {
    match e {
        Expr::Star => None,
        Expr::Column(c) => column_type(db, scope, c).map(|(_, t)| class_of(t)),
        Expr::Aggregate { func: AggFunc::Count | AggFunc::Sum | AggFunc::Avg, .. } => Some(Class::Number),
        Expr::Aggregate { arg: AggArg::Star, .. } => Some(Class::Number),
        Expr::Aggregate { arg: AggArg::Column(c), .. } => column_type(db, scope, c).map(|(_, t)| class_of(t)),
    }
}

fn value_class(v: &Value) -> Option<Class> {
    match v {
        Value::Null => None,
        Value::Int(_) | Value::Real(_) => Some(Class::Number),
        Value::Text(_) => Some(Class::Text),
    }
}

/// Candidate values for one slot, current value excluded, in a fixed order:
/// schema order for tables and columns, ascending for literals.
pub fn candidate_domain(
    slot: SlotId,
    structure: &QueryStructure,
    ctx: &DomainContext<'_>,
    history: &WhereHistory,
) -> Vec<Constant> {
    domain_under(slot, structure, structure.assignment(), ctx, history)
}

/// Domain of `slot` when the structure carries `assignment`; unassigned
/// slots read as blanks.
pub(crate) fn domain_under(
    slot: SlotId,
    structure: &QueryStructure,
    assignment: &Assignment,
    ctx: &DomainContext<'_>,
    history: &WhereHistory,
) -> Vec<Constant> {
    let Some(index) = structure.position(slot) else {
        return Vec::new();
    };
    let current = assignment.get(&slot).cloned();
    let query = structure.instantiate_partial(assignment);
    let mut walked = query.clone();
    let mut values = at_site(&mut walked, index, |site, _| raw_domain(site, &query, ctx)).unwrap_or_default();
    if let Some(bounds) = history.bounds(slot) {
        values.retain(|v| match v {
            Constant::Literal(x) => x.as_f64().is_none_or(|f| bounds.admits(f)),
            _ => true,
        });
    }
    if let Some(cur) = current {
        values.retain(|v| !same_constant(v, &cur, &query, ctx.db, structure.slots()[index].depth));
    }
    values
}

fn same_constant(a: &Constant, b: &Constant, query: &Query, db: &Database, depth: usize) -> bool {
    match (a, b) {
        (Constant::Literal(x), Constant::Literal(y)) => x.same_cell(y) && value_class(x) == value_class(y),
        (Constant::Column(x), Constant::Column(y)) => {
            if x == y {
                return true;
            }
            let scope: Vec<&str> = level(query, depth).tables().collect();
            match (column_type(db, &scope, x), column_type(db, &scope, y)) {
                (Some((tx, _)), Some((ty, _))) => tx == ty && x.column == y.column,
                _ => false,
            }
        }
        _ => a == b,
    }
}

fn raw_domain(site: &Site<'_>, query: &Query, ctx: &DomainContext<'_>) -> Vec<Constant> {
    let db = ctx.db;
    let lvl = level(query, site.depth);
    let scope: Vec<&str> = lvl.tables().filter(|t| !t.is_empty()).collect();
    match site.role {
        Role::TableFrom => db.schema().tables.iter().map(|t| Constant::Table(t.name.clone())).collect(),
        Role::TableJoin(i) => {
            let before: Vec<&str> = lvl.from.iter().map(String::as_str).chain(lvl.joins[..i].iter().map(|j| j.table.as_str())).collect();
            join_tables(db, &before).into_iter().map(Constant::Table).collect()
        }
        Role::Column(counterpart) => {
            let want = match counterpart {
                Counterpart::None => None,
                Counterpart::Literal(v) => value_class(v),
                Counterpart::Column(c) => column_type(db, &scope, c).map(|(_, t)| class_of(t)),
                Counterpart::Expr(e) => expr_class(db, &scope, e),
                Counterpart::List(vs) => vs.iter().find_map(value_class),
                Counterpart::AggregateArg(AggFunc::Sum | AggFunc::Avg) => Some(Class::Number),
                Counterpart::AggregateArg(_) => None,
            };
            let qualify = scope.len() > 1;
            let mut out = Vec::new();
            for t in &scope {
                let Some(def) = db.schema().table(t) else { continue };
                for c in &def.columns {
                    if want.is_some_and(|w| w != class_of(c.ty)) {
                        continue;
                    }
                    let r = if qualify { ColumnRef::qualified(*t, &c.name) } else { ColumnRef::new(&c.name) };
                    out.push(Constant::Column(r));
                }
            }
            out
        }
        Role::Aggregate { arg } => {
            let allowed: Vec<AggFunc> = match arg {
                AggArg::Star => vec![AggFunc::Count],
                AggArg::Column(c) => match column_type(db, &scope, c) {
                    Some((_, t)) if !t.is_numeric() => vec![AggFunc::Count, AggFunc::Min, AggFunc::Max],
                    _ => AggFunc::ALL.to_vec(),
                },
            };
            allowed.into_iter().map(Constant::Aggregate).collect()
        }
        Role::Literal { target, op } => literal_pool(target, op, &scope, ctx).into_iter().map(Constant::Literal).collect(),
        Role::Limit => (1..=ctx.max_small_int()).map(|n| Constant::Literal(Value::Int(n))).collect(),
        Role::Operator { left, right } => {
            let class = expr_class(db, &scope, left).or_else(|| match right {
                Operand::Literal(v) => value_class(v),
                Operand::Expr(e) => expr_class(db, &scope, e),
            });
            let mut ops = CmpOp::ORDERING.to_vec();
            if class != Some(Class::Number) {
                ops.push(CmpOp::Like);
            }
            ops.into_iter().map(Constant::Operator).collect()
        }
        Role::Direction => [SortDir::Asc, SortDir::Desc].into_iter().map(Constant::Direction).collect(),
    }
}

/// Tables sharing at least one column name with some table of `present`,
/// in schema order, excluding those already present.
pub fn join_tables(db: &Database, present: &[&str]) -> Vec<String> {
    let mut names = std::collections::HashSet::new();
    for t in present {
        if let Some(def) = db.schema().table(t) {
            names.extend(def.column_names());
        }
    }
    db.schema()
        .tables
        .iter()
        .filter(|t| !present.contains(&t.name.as_str()))
        .filter(|t| t.column_names().any(|c| names.contains(c)))
        .map(|t| t.name.clone())
        .collect()
}

fn literal_pool(target: &Expr, op: Option<CmpOp>, scope: &[&str], ctx: &DomainContext<'_>) -> Vec<Value> {
    let db = ctx.db;
    if let Expr::Aggregate { func: AggFunc::Count, .. } = target {
        return (0..=ctx.max_small_int()).map(Value::Int).collect();
    }
    let column = match target {
        Expr::Column(c) => Some(c),
        Expr::Aggregate { arg: AggArg::Column(c), .. } => Some(c),
        _ => None,
    };
    let resolved = column.and_then(|c| column_type(db, scope, c).map(|(t, ty)| (t, c.column.clone(), ty)));
    let class = match (&resolved, op) {
        (_, Some(CmpOp::Like)) => Some(Class::Text),
        (Some((_, _, ty)), _) => Some(class_of(*ty)),
        (None, _) => None,
    };
    let mut pool: Vec<Value> = Vec::new();
    if let Some((t, c, _)) = &resolved {
        if let (Some(rel), Some((i, _))) = (db.table(t), db.schema().table(t).and_then(|d| d.column(c))) {
            pool.extend(rel.rows.iter().map(|r| r[i].clone()).filter(|v| !v.is_null()));
        }
    }
    pool.extend(ctx.question_literals.iter().cloned());
    pool.retain(|v| class.is_none() || value_class(v) == class);
    pool.sort_by(|a, b| a.cell_cmp(b));
    pool.dedup_by(|a, b| a.same_cell(b));
    if op == Some(CmpOp::Like) {
        let mut wrapped: Vec<Value> = pool
            .into_iter()
            .filter_map(|v| v.as_text().map(|s| Value::Text(format!("%{}%", s.trim_matches('%')))))
            .collect();
        wrapped.dedup();
        return wrapped;
    }
    pool
}
