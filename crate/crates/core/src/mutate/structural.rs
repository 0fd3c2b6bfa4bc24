use serde::{Deserialize, Serialize};

use crate::exec::Relation;
use crate::sql::ast::{CmpOp, ColumnRef, Expr, Operand, Predicate, Query, SetOp, SetOpKind};
use crate::sql::sites::{for_each_constant, Clause};
use crate::sql::structure::{extract_structure, Assignment, QueryStructure, SlotId};
use crate::value::Value;

use super::domain::{domain_under, DomainContext};
use super::history::WhereHistory;
use super::MutateError;

/// Skeleton-level edits. Added fragments carry fresh, unassigned slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum EditVariant {
    /// `EXCEPT` arm repeating the outer query with `WHERE #c #op #v`.
    AddExcept,
    /// `WHERE #c #op #v` on a query without WHERE.
    AddWhereClause,
    ExtendWhereConjunct,
    ExtendWhereDisjunct,
    /// Appends `count` fresh column items to the SELECT list.
    AddSelectColumn { count: usize },
    /// Drops the SELECT items at these positions.
    RemoveSelectColumn { positions: Vec<usize> },
}

/// A structural edit plus the values chosen for its fresh slots, keyed by
/// slot ids of the edited structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralEdit {
    #[serde(flatten)]
    pub variant: EditVariant,
    pub fills: Assignment,
}

/// An edited structure whose fresh slots are still open.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralVariant {
    pub variant: EditVariant,
    pub structure: QueryStructure,
}

impl StructuralVariant {
    pub fn fresh_slots(&self) -> Vec<SlotId> {
        self.structure.unassigned().map(|s| s.id).collect()
    }
}

fn blank_column() -> Expr {
    Expr::Column(ColumnRef { table: None, column: String::new() })
}

fn blank_compare() -> Predicate {
    Predicate::Compare { left: blank_column(), op: CmpOp::Eq, right: Operand::Literal(Value::Null) }
}

fn count_sites(q: &Query, keep: impl Fn(Clause, usize) -> bool) -> usize {
    let mut q = q.clone();
    let mut n = 0;
    for_each_constant(&mut q, |site, _| {
        if keep(site.clause, site.depth) {
            n += 1;
        }
    });
    n
}

/// Applies `variant` to the skeleton of `structure`. Existing slots keep their
/// values (renumbered in traversal order); added slots are unassigned.
pub fn graft(structure: &QueryStructure, variant: &EditVariant) -> Result<QueryStructure, MutateError> {
    let base = structure.instantiate()?;
    let mut q = base.clone();
    let (start, added) = match variant {
        EditVariant::AddExcept => {
            if q.set_op.is_some() {
                return Err(MutateError::NotApplicable("query already has a set operation"));
            }
            let mut arm = base.clone();
            arm.order_by.clear();
            arm.limit = None;
            arm.where_clause = Some(blank_compare());
            // arm slots copy the outer values; only its predicate is fresh
            let start = count_sites(&q, |_, _| true) + count_sites(&arm, |c, _| c < Clause::Where);
            q.set_op = Some(SetOp { kind: SetOpKind::Except, query: Box::new(arm) });
            (start, 3)
        }
        EditVariant::AddWhereClause => {
            if q.where_clause.is_some() {
                return Err(MutateError::NotApplicable("query already has WHERE"));
            }
            q.where_clause = Some(blank_compare());
            (count_sites(&base, |c, d| d == 0 && c <= Clause::Where), 3)
        }
        EditVariant::ExtendWhereConjunct | EditVariant::ExtendWhereDisjunct => {
            let Some(old) = q.where_clause.take() else {
                return Err(MutateError::NotApplicable("query has no WHERE"));
            };
            q.where_clause = Some(if *variant == EditVariant::ExtendWhereConjunct {
                Predicate::and(old, blank_compare())
            } else {
                Predicate::or(old, blank_compare())
            });
            (count_sites(&base, |c, d| d == 0 && c <= Clause::Where), 3)
        }
        EditVariant::AddSelectColumn { count } => {
            if *count == 0 {
                return Err(MutateError::NotApplicable("nothing to add"));
            }
            q.select.extend(std::iter::repeat_with(blank_column).take(*count));
            (count_sites(&base, |c, d| d == 0 && c <= Clause::Select), *count)
        }
        EditVariant::RemoveSelectColumn { positions } => {
            let mut sorted = positions.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.is_empty()
                || sorted.len() >= q.select.len()
                || sorted.iter().any(|&p| p >= q.select.len() || q.select[p] == Expr::Star)
            {
                return Err(MutateError::NotApplicable("invalid SELECT positions"));
            }
            for &p in sorted.iter().rev() {
                q.select.remove(p);
            }
            (0, 0)
        }
    };
    Ok(QueryStructure::build(&q, |i| i >= start && i < start + added))
}

/// Shape-gated structural variants of `structure`, given the output it
/// produced (`actual`) and the example (`expected`).
///
/// A column-count mismatch yields only SELECT edits. Otherwise a row-count
/// mismatch yields WHERE edits, plus an EXCEPT arm when there are too many
/// rows. Matching shapes yield nothing.
pub fn structural_variants(structure: &QueryStructure, actual: &Relation, expected: &Relation) -> Vec<StructuralVariant> {
    let Ok(q) = structure.instantiate() else { return Vec::new() };
    let mut variants = Vec::new();
    if actual.arity() != expected.arity() {
        if q.set_op.is_some() {
            return Vec::new();
        }
        if expected.arity() > actual.arity() {
            variants.push(EditVariant::AddSelectColumn { count: expected.arity() - actual.arity() });
        } else {
            let removable: Vec<usize> = (0..q.select.len()).filter(|&i| q.select[i] != Expr::Star).collect();
            let d = actual.arity() - expected.arity();
            if d < q.select.len() {
                for combo in combinations(&removable, d) {
                    variants.push(EditVariant::RemoveSelectColumn { positions: combo });
                }
            }
        }
    } else if actual.len() != expected.len() {
        if actual.len() > expected.len() && q.set_op.is_none() {
            variants.push(EditVariant::AddExcept);
        }
        if q.where_clause.is_none() {
            variants.push(EditVariant::AddWhereClause);
        } else {
            variants.push(EditVariant::ExtendWhereConjunct);
            variants.push(EditVariant::ExtendWhereDisjunct);
        }
    }
    variants
        .into_iter()
        .filter_map(|v| graft(structure, &v).ok().map(|s| StructuralVariant { variant: v, structure: s }))
        .collect()
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every complete assignment of the fresh slots of `variant`, each slot's
/// domain computed given the slots filled before it. Order is depth-first in
/// slot order.
pub fn fresh_fills(variant: &StructuralVariant, ctx: &DomainContext<'_>) -> Vec<Assignment> {
    let fresh = variant.fresh_slots();
    let mut out = Vec::new();
    let history = WhereHistory::new();
    let mut stack = vec![(0usize, variant.structure.assignment().clone())];
    while let Some((depth, assignment)) = stack.pop() {
        if depth == fresh.len() {
            out.push(assignment.into_iter().filter(|(k, _)| fresh.contains(k)).collect());
            continue;
        }
        let domain = domain_under(fresh[depth], &variant.structure, &assignment, ctx, &history);
        for v in domain.into_iter().rev() {
            let mut next = assignment.clone();
            next.insert(fresh[depth], v);
            stack.push((depth + 1, next));
        }
    }
    out
}

/// Applies a structural edit: graft, then assign its fills.
pub fn apply_edit(structure: &QueryStructure, edit: &StructuralEdit) -> Result<QueryStructure, MutateError> {
    let mut grafted = graft(structure, &edit.variant)?;
    for (id, v) in &edit.fills {
        grafted.assign(*id, v.clone())?;
    }
    Ok(grafted)
}

/// Structure of the query reached by applying `edit` to `query`.
pub fn edited_structure(query: &Query, edit: &StructuralEdit) -> Result<QueryStructure, MutateError> {
    apply_edit(&extract_structure(query), edit)
}
