use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::domain::at_site;
use crate::sql::ast::{CmpOp, Expr};
use crate::sql::sites::{Clause, Role};
use crate::sql::structure::{QueryStructure, SlotId};
use crate::sql::Constant;
use crate::value::Value;

/// Exclusive bounds: a value `v` is admissible iff `lower < v < upper`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Option<i64>,
    pub upper: Option<i64>,
}

impl Bounds {
    pub fn admits(&self, v: f64) -> bool {
        self.lower.is_none_or(|l| v > l as f64) && self.upper.is_none_or(|u| v < u as f64)
    }

    /// True when no integer fits strictly between the bounds.
    pub fn is_empty(&self) -> bool {
        matches!((self.lower, self.upper), (Some(l), Some(u)) if u.saturating_sub(l) <= 1)
    }
}

/// Per-slot bounds on integer WHERE constants, learned from row counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WhereHistory {
    bounds: BTreeMap<SlotId, Bounds>,
}

impl WhereHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bounds(&self, slot: SlotId) -> Option<&Bounds> {
        self.bounds.get(&slot)
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

/// Comparison operator of `slot` when it is an integer constant whose row
/// count is monotone in its value: an outer WHERE literal compared by an
/// ordering operator, outside any NOT, in a query without HAVING and without
/// a LIMIT feeding a set operation.
pub fn history_operator(structure: &QueryStructure, slot: SlotId) -> Option<CmpOp> {
    let index = structure.position(slot)?;
    if !matches!(structure.value(slot), Some(Constant::Literal(Value::Int(_)))) {
        return None;
    }
    let mut q = structure.instantiate_partial(structure.assignment());
    if q.having.is_some() || (q.set_op.is_some() && q.limit.is_some()) {
        return None;
    }
    at_site(&mut q, index, |site, _| match site.role {
        Role::Literal { target: Expr::Column(_), op: Some(op) }
            if site.clause == Clause::Where && site.depth == 0 && !site.negated =>
        {
            matches!(op, CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge).then_some(op)
        }
        _ => None,
    })
    .flatten()
}

/// Narrows the bounds of `slot` after `tried_value` produced `observed_rows`
/// where `expected_rows` were wanted. Slots that are not monotone integer
/// WHERE constants, and equal counts, leave the history unchanged.
pub fn update_history(
    history: &WhereHistory,
    structure: &QueryStructure,
    slot: SlotId,
    tried_value: &Constant,
    observed_rows: usize,
    expected_rows: usize,
) -> WhereHistory {
    let mut next = history.clone();
    record(&mut next, structure, slot, tried_value, observed_rows, expected_rows);
    next
}

pub(crate) fn record(
    history: &mut WhereHistory,
    structure: &QueryStructure,
    slot: SlotId,
    tried_value: &Constant,
    observed_rows: usize,
    expected_rows: usize,
) {
    let Constant::Literal(Value::Int(c)) = tried_value else { return };
    if observed_rows == expected_rows {
        return;
    }
    let Some(op) = history_operator(structure, slot) else { return };
    // rows grow with the constant for < and <=, shrink for > and >=
    let grows = matches!(op, CmpOp::Lt | CmpOp::Le);
    let raise_lower = (observed_rows < expected_rows) == grows;
    let b = history.bounds.entry(slot).or_default();
    if raise_lower {
        b.lower = Some(b.lower.map_or(*c, |l| l.max(*c)));
    } else {
        b.upper = Some(b.upper.map_or(*c, |u| u.min(*c)));
    }
}
