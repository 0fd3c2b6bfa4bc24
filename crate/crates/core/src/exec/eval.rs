use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::database::Database;
use super::relation::Relation;
use super::schema::{ColumnType, TableDef};
use crate::sql::ast::{AggArg, AggFunc, CmpOp, ColumnRef, Expr, Operand, Predicate, Query, SetOpKind, SortDir};
use crate::value::{CellKey, RowKey, Value};

/// Upper bound on rows materialized by FROM/JOIN before filtering.
const MAX_INTERMEDIATE_ROWS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("table {0} appears twice in FROM/JOIN")]
    DuplicateTable(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("ambiguous column {0}")]
    AmbiguousColumn(String),
    #[error("cannot compare {left} {op} {right}")]
    TypeMismatch { left: String, op: &'static str, right: String },
    #[error("{func} over non-numeric argument {arg}")]
    NonNumericAggregate { func: &'static str, arg: String },
    #[error("aggregate not allowed in {0}")]
    MisplacedAggregate(&'static str),
    #[error("* not allowed in {0}")]
    MisplacedStar(&'static str),
    #[error("HAVING requires grouping")]
    HavingWithoutGrouping,
    #[error("set operation arms have {left} and {right} columns")]
    SetOpArity { left: usize, right: usize },
    #[error("integer overflow in SUM")]
    Overflow,
    #[error("intermediate result exceeds {0} rows")]
    TooLarge(usize),
}

/// Evaluates `query` over `db`.
pub fn execute(query: &Query, db: &Database) -> Result<Relation, ExecError> {
    let plan = Plan::compile(query, db)?;
    let mut out = plan.run()?;
    if let Some(set) = &query.set_op {
        let right = execute(&set.query, db)?;
        if right.arity() != out.arity() {
            return Err(ExecError::SetOpArity { left: out.arity(), right: right.arity() });
        }
        out.rows = combine(set.kind, out.rows, &right.rows);
    }
    Ok(out)
}

fn combine(kind: SetOpKind, left: Vec<Vec<Value>>, right: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let right_keys: HashSet<RowKey<'_>> = right.iter().map(|r| RowKey(r)).collect();
    let mut seen: HashSet<Vec<CellKey>> = HashSet::new();
    let mut out = Vec::new();
    let mut push = |row: &Vec<Value>, out: &mut Vec<Vec<Value>>| {
        if seen.insert(row.iter().cloned().map(CellKey).collect()) {
            out.push(row.clone());
        }
    };
    match kind {
        SetOpKind::Union => {
            for row in left.iter().chain(right) {
                push(row, &mut out);
            }
        }
        SetOpKind::Except => {
            for row in left.iter().filter(|r| !right_keys.contains(&RowKey(r))) {
                push(row, &mut out);
            }
        }
        SetOpKind::Intersect => {
            for row in left.iter().filter(|r| right_keys.contains(&RowKey(r))) {
                push(row, &mut out);
            }
        }
    }
    out
}

/// Static class of an expression, used for type checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Number,
    Text,
    Null,
}

impl Class {
    fn of_column(ty: ColumnType) -> Class {
        if ty.is_numeric() {
            Class::Number
        } else {
            Class::Text
        }
    }

    fn of_value(v: &Value) -> Class {
        match v {
            Value::Null => Class::Null,
            Value::Int(_) | Value::Real(_) => Class::Number,
            Value::Text(_) => Class::Text,
        }
    }

    fn compatible(self, other: Class) -> bool {
        self == other || self == Class::Null || other == Class::Null
    }
}

#[derive(Debug, Clone, Copy)]
struct Loc {
    table: usize,
    col: usize,
}

#[derive(Debug)]
enum CExpr {
    Col(Loc),
    Agg { func: AggFunc, distinct: bool, arg: Option<Loc> },
}

#[derive(Debug)]
enum CRhs {
    Lit(Value),
    Expr(CExpr),
}

#[derive(Debug)]
enum CPred {
    Cmp { left: CExpr, op: CmpOp, right: CRhs },
    In { left: CExpr, list: Vec<Value> },
    And(Box<CPred>, Box<CPred>),
    Or(Box<CPred>, Box<CPred>),
    Not(Box<CPred>),
}

struct Scope<'a> {
    names: Vec<&'a str>,
    defs: Vec<&'a TableDef>,
    rels: Vec<&'a Relation>,
}

impl<'a> Scope<'a> {
    fn resolve(&self, c: &ColumnRef, visible: usize) -> Result<(Loc, Class), ExecError> {
        let found: Vec<(Loc, Class)> = (0..visible)
            .filter(|&t| c.table.as_deref().is_none_or(|q| q == self.names[t]))
            .filter_map(|t| {
                self.defs[t].column(&c.column).map(|(i, d)| (Loc { table: t, col: i }, Class::of_column(d.ty)))
            })
            .collect();
        match found.len() {
            1 => Ok(found[0]),
            0 => match &c.table {
                Some(q) if !self.names[..visible].contains(&q.as_str()) => Err(ExecError::UnknownTable(q.clone())),
                _ => Err(ExecError::UnknownColumn(c.to_string())),
            },
            _ => Err(ExecError::AmbiguousColumn(c.to_string())),
        }
    }

    fn expr(&self, e: &Expr, clause: &'static str, allow_agg: bool) -> Result<(CExpr, Class), ExecError> {
        match e {
            Expr::Star => Err(ExecError::MisplacedStar(clause)),
            Expr::Column(c) => {
                let (loc, class) = self.resolve(c, self.names.len())?;
                Ok((CExpr::Col(loc), class))
            }
            Expr::Aggregate { func, distinct, arg } => {
                if !allow_agg {
                    return Err(ExecError::MisplacedAggregate(clause));
                }
                let (arg, class) = match arg {
                    AggArg::Star if *func == AggFunc::Count && !*distinct => (None, Class::Number),
                    AggArg::Star => return Err(ExecError::NonNumericAggregate { func: func.name(), arg: "*".into() }),
                    AggArg::Column(c) => {
                        let (loc, class) = self.resolve(c, self.names.len())?;
                        (Some(loc), class)
                    }
                };
                let result = match func {
                    AggFunc::Count => Class::Number,
                    AggFunc::Sum | AggFunc::Avg => {
                        if class != Class::Number {
                            return Err(ExecError::NonNumericAggregate { func: func.name(), arg: e.to_string() });
                        }
                        Class::Number
                    }
                    AggFunc::Min | AggFunc::Max => class,
                };
                Ok((CExpr::Agg { func: *func, distinct: *distinct, arg }, result))
            }
        }
    }

    fn predicate(&self, p: &Predicate, clause: &'static str, allow_agg: bool) -> Result<CPred, ExecError> {
        Ok(match p {
            Predicate::Compare { left, op, right } => {
                let (l, lc) = self.expr(left, clause, allow_agg)?;
                let (r, rc, rtext) = match right {
                    Operand::Literal(v) => (CRhs::Lit(v.clone()), Class::of_value(v), v.to_string()),
                    Operand::Expr(e) => {
                        let (r, rc) = self.expr(e, clause, allow_agg)?;
                        (CRhs::Expr(r), rc, e.to_string())
                    }
                };
                let ok = if *op == CmpOp::Like {
                    lc.compatible(Class::Text) && rc.compatible(Class::Text)
                } else {
                    lc.compatible(rc)
                };
                if !ok {
                    return Err(ExecError::TypeMismatch { left: left.to_string(), op: op.symbol(), right: rtext });
                }
                CPred::Cmp { left: l, op: *op, right: r }
            }
            Predicate::In { left, list } => {
                let (l, lc) = self.expr(left, clause, allow_agg)?;
                if let Some(bad) = list.iter().find(|v| !lc.compatible(Class::of_value(v))) {
                    return Err(ExecError::TypeMismatch { left: left.to_string(), op: "IN", right: bad.to_string() });
                }
                CPred::In { left: l, list: list.clone() }
            }
            Predicate::And(a, b) => CPred::And(
                Box::new(self.predicate(a, clause, allow_agg)?),
                Box::new(self.predicate(b, clause, allow_agg)?),
            ),
            Predicate::Or(a, b) => CPred::Or(
                Box::new(self.predicate(a, clause, allow_agg)?),
                Box::new(self.predicate(b, clause, allow_agg)?),
            ),
            Predicate::Not(a) => CPred::Not(Box::new(self.predicate(a, clause, allow_agg)?)),
        })
    }
}

enum Item {
    Star,
    Expr(CExpr),
}

struct Plan<'a> {
    scope: Scope<'a>,
    from_count: usize,
    joins: Vec<(Loc, Loc)>,
    filter: Option<CPred>,
    grouped: bool,
    group_by: Vec<Loc>,
    having: Option<CPred>,
    items: Vec<Item>,
    columns: Vec<String>,
    order: Vec<(CExpr, SortDir)>,
    distinct: bool,
    limit: Option<u64>,
    ordered: bool,
}

impl<'a> Plan<'a> {
    fn compile(q: &Query, db: &'a Database) -> Result<Plan<'a>, ExecError> {
        let mut scope = Scope { names: Vec::new(), defs: Vec::new(), rels: Vec::new() };
        for name in q.tables() {
            if scope.names.contains(&name) {
                return Err(ExecError::DuplicateTable(name.to_string()));
            }
            let def = db.schema().table(name).ok_or_else(|| ExecError::UnknownTable(name.to_string()))?;
            let rel = db.table(name).ok_or_else(|| ExecError::UnknownTable(name.to_string()))?;
            scope.names.push(def.name.as_str());
            scope.defs.push(def);
            scope.rels.push(rel);
        }
        let from_count = q.from.len();
        let mut joins = Vec::with_capacity(q.joins.len());
        for (i, j) in q.joins.iter().enumerate() {
            let visible = from_count + i + 1;
            let (l, lc) = scope.resolve(&j.left, visible)?;
            let (r, rc) = scope.resolve(&j.right, visible)?;
            if !lc.compatible(rc) {
                return Err(ExecError::TypeMismatch { left: j.left.to_string(), op: "=", right: j.right.to_string() });
            }
            joins.push((l, r));
        }
        let filter = q.where_clause.as_ref().map(|p| scope.predicate(p, "WHERE", false)).transpose()?;
        let group_by =
            q.group_by.iter().map(|c| scope.resolve(c, scope.names.len()).map(|r| r.0)).collect::<Result<Vec<_>, _>>()?;
        let having = q.having.as_ref().map(|p| scope.predicate(p, "HAVING", true)).transpose()?;
        let mut items = Vec::with_capacity(q.select.len());
        let mut columns = Vec::new();
        for e in &q.select {
            match e {
                Expr::Star => {
                    items.push(Item::Star);
                    for def in &scope.defs {
                        columns.extend(def.column_names().map(str::to_string));
                    }
                }
                Expr::Column(c) => {
                    items.push(Item::Expr(scope.expr(e, "SELECT", true)?.0));
                    columns.push(c.column.clone());
                }
                Expr::Aggregate { .. } => {
                    items.push(Item::Expr(scope.expr(e, "SELECT", true)?.0));
                    columns.push(e.to_string());
                }
            }
        }
        let order = q
            .order_by
            .iter()
            .map(|o| scope.expr(&o.expr, "ORDER BY", true).map(|(e, _)| (e, o.dir)))
            .collect::<Result<Vec<_>, _>>()?;
        let has_agg = q.select.iter().any(Expr::is_aggregate) || q.order_by.iter().any(|o| o.expr.is_aggregate());
        let grouped = !group_by.is_empty() || has_agg;
        if having.is_some() && !grouped {
            return Err(ExecError::HavingWithoutGrouping);
        }
        Ok(Plan {
            scope,
            from_count,
            joins,
            filter,
            grouped: grouped || having.is_some(),
            group_by,
            having,
            items,
            columns,
            order,
            distinct: q.distinct,
            limit: q.limit,
            ordered: !q.order_by.is_empty(),
        })
    }

    fn run(&self) -> Result<Relation, ExecError> {
        let rows = self.source()?;
        let k = self.scope.names.len();
        let n = rows.len() / k.max(1);
        let ctx = Ctx { scope: &self.scope, rows: &rows, width: k };
        let mut kept = Vec::new();
        for i in 0..n {
            let keep = match &self.filter {
                Some(p) => ctx.pred(p, &[i])? == Some(true),
                None => true,
            };
            if keep {
                kept.push(i);
            }
        }
        let units: Vec<Vec<usize>> = if self.grouped {
            self.groups(&ctx, kept)
        } else {
            kept.into_iter().map(|i| vec![i]).collect()
        };
        let mut produced: Vec<(Vec<Value>, Vec<Value>)> = Vec::with_capacity(units.len());
        for unit in &units {
            if let Some(h) = &self.having {
                if ctx.pred(h, unit)? != Some(true) {
                    continue;
                }
            }
            let mut row = Vec::with_capacity(self.columns.len());
            for item in &self.items {
                match item {
                    Item::Star => {
                        for t in 0..k {
                            let width = self.scope.defs[t].columns.len();
                            match unit.first() {
                                Some(&i) => row.extend_from_slice(ctx.tuple_row(i, t)),
                                None => row.extend(std::iter::repeat_n(Value::Null, width)),
                            }
                        }
                    }
                    Item::Expr(e) => row.push(ctx.expr(e, unit)?),
                }
            }
            let keys = self.order.iter().map(|(e, _)| ctx.expr(e, unit)).collect::<Result<Vec<_>, _>>()?;
            produced.push((row, keys));
        }
        if self.distinct {
            let mut seen = HashSet::new();
            produced.retain(|(row, _)| seen.insert(row.iter().cloned().map(CellKey).collect::<Vec<_>>()));
        }
        if !self.order.is_empty() {
            produced.sort_by(|(_, a), (_, b)| {
                for ((x, y), (_, dir)) in a.iter().zip(b).zip(&self.order) {
                    let o = x.cell_cmp(y);
                    if o.is_ne() {
                        return if *dir == SortDir::Desc { o.reverse() } else { o };
                    }
                }
                std::cmp::Ordering::Equal
            });
        }
        if let Some(l) = self.limit {
            produced.truncate(usize::try_from(l).unwrap_or(usize::MAX));
        }
        Ok(Relation::new(self.columns.clone(), produced.into_iter().map(|(r, _)| r).collect(), self.ordered))
    }

    /// Cross product of FROM tables, then one nested-loop join per JOIN.
    /// Rows are flat tuples of per-table row indices.
    fn source(&self) -> Result<Vec<u32>, ExecError> {
        let k = self.scope.names.len();
        let mut width = 0;
        let mut rows: Vec<u32> = vec![];
        let mut count = 1usize;
        for t in 0..self.from_count {
            let len = self.scope.rels[t].len();
            let next = count.saturating_mul(len);
            if next > MAX_INTERMEDIATE_ROWS {
                return Err(ExecError::TooLarge(MAX_INTERMEDIATE_ROWS));
            }
            let mut grown = Vec::with_capacity(next * (width + 1));
            for i in 0..count {
                for r in 0..len {
                    grown.extend_from_slice(&rows[i * width..(i + 1) * width]);
                    grown.push(r as u32);
                }
            }
            rows = grown;
            width += 1;
            count = next;
        }
        for (j, &(l, r)) in self.joins.iter().enumerate() {
            let t = self.from_count + j;
            let rel = self.scope.rels[t];
            let mut grown = Vec::new();
            let mut out = 0usize;
            for i in 0..count {
                let base = &rows[i * width..(i + 1) * width];
                for (ri, row) in rel.rows.iter().enumerate() {
                    let cell = |loc: Loc| -> &Value {
                        if loc.table == t {
                            &row[loc.col]
                        } else {
                            &self.scope.rels[loc.table].rows[base[loc.table] as usize][loc.col]
                        }
                    };
                    let (a, b) = (cell(l), cell(r));
                    if !a.is_null() && !b.is_null() && a.same_cell(b) {
                        grown.extend_from_slice(base);
                        grown.push(ri as u32);
                        out += 1;
                        if out > MAX_INTERMEDIATE_ROWS {
                            return Err(ExecError::TooLarge(MAX_INTERMEDIATE_ROWS));
                        }
                    }
                }
            }
            rows = grown;
            width += 1;
            count = out;
        }
        debug_assert_eq!(width, k);
        Ok(rows)
    }

    fn groups(&self, ctx: &Ctx<'_>, kept: Vec<usize>) -> Vec<Vec<usize>> {
        if self.group_by.is_empty() {
            return vec![kept];
        }
        let mut index: HashMap<Vec<CellKey>, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in kept {
            let key: Vec<CellKey> = self.group_by.iter().map(|&loc| CellKey(ctx.cell(i, loc).clone())).collect();
            let g = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }
}

struct Ctx<'a> {
    scope: &'a Scope<'a>,
    rows: &'a [u32],
    width: usize,
}

impl Ctx<'_> {
    fn cell(&self, i: usize, loc: Loc) -> &Value {
        let r = self.rows[i * self.width + loc.table] as usize;
        &self.scope.rels[loc.table].rows[r][loc.col]
    }

    fn tuple_row(&self, i: usize, t: usize) -> &[Value] {
        let r = self.rows[i * self.width + t] as usize;
        &self.scope.rels[t].rows[r]
    }

    /// Bare columns in a grouped unit take the first row's value.
    fn expr(&self, e: &CExpr, unit: &[usize]) -> Result<Value, ExecError> {
        match e {
            CExpr::Col(loc) => Ok(unit.first().map_or(Value::Null, |&i| self.cell(i, *loc).clone())),
            CExpr::Agg { func, distinct, arg } => self.aggregate(*func, *distinct, *arg, unit),
        }
    }

    fn aggregate(&self, func: AggFunc, distinct: bool, arg: Option<Loc>, unit: &[usize]) -> Result<Value, ExecError> {
        let Some(loc) = arg else {
            return Ok(Value::Int(unit.len() as i64));
        };
        let mut values: Vec<&Value> = unit.iter().map(|&i| self.cell(i, loc)).filter(|v| !v.is_null()).collect();
        if distinct {
            let mut seen = HashSet::new();
            values.retain(|v| seen.insert(CellKey((*v).clone())));
        }
        Ok(match func {
            AggFunc::Count => Value::Int(values.len() as i64),
            _ if values.is_empty() => Value::Null,
            AggFunc::Sum => {
                if values.iter().all(|v| matches!(v, Value::Int(_))) {
                    let mut acc: i64 = 0;
                    for v in &values {
                        if let Value::Int(x) = v {
                            acc = acc.checked_add(*x).ok_or(ExecError::Overflow)?;
                        }
                    }
                    Value::Int(acc)
                } else {
                    Value::Real(values.iter().filter_map(|v| v.as_f64()).sum())
                }
            }
            AggFunc::Avg => {
                let sum: f64 = values.iter().filter_map(|v| v.as_f64()).sum();
                Value::Real(sum / values.len() as f64)
            }
            AggFunc::Min => values.iter().min_by(|a, b| a.cell_cmp(b)).map(|v| (*v).clone()).unwrap_or(Value::Null),
            AggFunc::Max => {
                values.iter().rev().max_by(|a, b| a.cell_cmp(b)).map(|v| (*v).clone()).unwrap_or(Value::Null)
            }
        })
    }

    fn pred(&self, p: &CPred, unit: &[usize]) -> Result<Option<bool>, ExecError> {
        Ok(match p {
            CPred::Cmp { left, op, right } => {
                let l = self.expr(left, unit)?;
                let r = match right {
                    CRhs::Lit(v) => v.clone(),
                    CRhs::Expr(e) => self.expr(e, unit)?,
                };
                compare(&l, *op, &r)
            }
            CPred::In { left, list } => {
                let l = self.expr(left, unit)?;
                if l.is_null() {
                    None
                } else if list.iter().any(|v| !v.is_null() && v.same_cell(&l)) {
                    Some(true)
                } else if list.iter().any(Value::is_null) {
                    None
                } else {
                    Some(false)
                }
            }
            CPred::And(a, b) => match self.pred(a, unit)? {
                Some(false) => Some(false),
                x => match (x, self.pred(b, unit)?) {
                    (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                },
            },
            CPred::Or(a, b) => match self.pred(a, unit)? {
                Some(true) => Some(true),
                x => match (x, self.pred(b, unit)?) {
                    (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                },
            },
            CPred::Not(a) => self.pred(a, unit)?.map(|b| !b),
        })
    }
}

fn compare(l: &Value, op: CmpOp, r: &Value) -> Option<bool> {
    if l.is_null() || r.is_null() {
        return None;
    }
    if op == CmpOp::Like {
        return Some(like_match(l.as_text()?, r.as_text()?));
    }
    let o = l.cell_cmp(r);
    Some(match op {
        CmpOp::Eq => o.is_eq(),
        CmpOp::Ne => o.is_ne(),
        CmpOp::Lt => o.is_lt(),
        CmpOp::Le => o.is_le(),
        CmpOp::Gt => o.is_gt(),
        CmpOp::Ge => o.is_ge(),
        CmpOp::Like => unreachable!(),
    })
}

/// Case-insensitive LIKE: `%` matches any run, `_` exactly one character.
pub fn like_match(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let p: Vec<char> = pattern.chars().flat_map(char::to_lowercase).collect();
    // reachable[j]: pattern prefix of length j matches the text prefix read so far
    let mut reachable = vec![false; p.len() + 1];
    reachable[0] = true;
    for j in 0..p.len() {
        if p[j] == '%' && reachable[j] {
            reachable[j + 1] = true;
        }
    }
    for &c in &t {
        let mut next = vec![false; p.len() + 1];
        for j in 0..p.len() {
            if !reachable[j] {
                continue;
            }
            match p[j] {
                '%' => {
                    next[j] = true;
                    next[j + 1] = true;
                }
                '_' => next[j + 1] = true,
                pc if pc == c => next[j + 1] = true,
                _ => {}
            }
        }
        for j in 0..p.len() {
            if p[j] == '%' && next[j] {
                next[j + 1] = true;
            }
        }
        reachable = next;
    }
    reachable[p.len()]
}
