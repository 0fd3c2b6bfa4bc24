//! Query structures: a query with every constant abstracted into a numbered,
//! typed placeholder, plus the assignment that restores the original.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::Query;
use super::print::print_with;
use super::sites::{for_each_constant, Clause, Constant, KeywordContext, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub u32);

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderSlot {
    pub id: SlotId,
    pub context: KeywordContext,
    pub kind: ValueKind,
    pub clause: Clause,
    /// 0 for the outer query, 1 inside a set-operation arm.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("no value assigned to placeholder {0}")]
    MissingSlot(SlotId),
    #[error("placeholder {0} does not exist")]
    UnknownSlot(SlotId),
    #[error("placeholder {slot} holds a {expected:?} but was given {found}")]
    KindMismatch { slot: SlotId, expected: ValueKind, found: String },
}

pub type Assignment = BTreeMap<SlotId, Constant>;

/// Skeleton plus slots plus assignment.
///
/// `slots` is kept in traversal (source) order. Ids are `1..=n` in that order
/// for extracted structures; grafted variants are renumbered the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryStructure {
    skeleton: Query,
    slots: Vec<PlaceholderSlot>,
    assignment: Assignment,
}

/// Abstracts every constant of `query` into a placeholder.
pub fn extract_structure(query: &Query) -> QueryStructure {
    QueryStructure::build(query, |_| false)
}

/// Rebuilds a query from a structure and an explicit assignment.
pub fn instantiate(structure: &QueryStructure, assignment: &Assignment) -> Result<Query, StructureError> {
    structure.instantiate_with(assignment)
}

/// True when both structures share keyword shape and slot kinds.
pub fn structures_equal(a: &QueryStructure, b: &QueryStructure) -> bool {
    a.skeleton == b.skeleton
        && a.slots.len() == b.slots.len()
        && a.slots.iter().zip(&b.slots).all(|(x, y)| x.kind == y.kind && x.context == y.context)
}

impl QueryStructure {
    /// Walks `query`, turning every constant into a slot. Positions for which
    /// `fresh(index)` holds are left unassigned.
    pub(crate) fn build(query: &Query, fresh: impl Fn(usize) -> bool) -> QueryStructure {
        let mut skeleton = query.clone();
        let mut slots = Vec::new();
        let mut assignment = BTreeMap::new();
        for_each_constant(&mut skeleton, |site, mut c| {
            let index = slots.len();
            let id = SlotId(index as u32 + 1);
            if !fresh(index) {
                assignment.insert(id, c.get());
            }
            let kind = c.kind();
            debug_assert!(site.context().admits(kind), "{:?} in {:?}", kind, site.context());
            slots.push(PlaceholderSlot { id, context: site.context(), kind, clause: site.clause, depth: site.depth });
            c.blank();
        });
        QueryStructure { skeleton, slots, assignment }
    }

    pub fn skeleton(&self) -> &Query {
        &self.skeleton
    }

    pub fn slots(&self) -> &[PlaceholderSlot] {
        &self.slots
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn slot(&self, id: SlotId) -> Option<&PlaceholderSlot> {
        self.position(id).map(|i| &self.slots[i])
    }

    /// Traversal index of a slot.
    pub fn position(&self, id: SlotId) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    pub fn value(&self, id: SlotId) -> Option<&Constant> {
        self.assignment.get(&id)
    }

    pub fn unassigned(&self) -> impl Iterator<Item = &PlaceholderSlot> {
        self.slots.iter().filter(|s| !self.assignment.contains_key(&s.id))
    }

    pub fn is_complete(&self) -> bool {
        self.unassigned().next().is_none()
    }

    fn check_kind(&self, id: SlotId, value: &Constant) -> Result<(), StructureError> {
        let slot = self.slot(id).ok_or(StructureError::UnknownSlot(id))?;
        if slot.kind != value.kind() {
            return Err(StructureError::KindMismatch { slot: id, expected: slot.kind, found: value.to_string() });
        }
        Ok(())
    }

    /// Sets one slot. Kind errors are reported; value-level errors (e.g. a
    /// non-positive LIMIT) surface on instantiation.
    pub fn assign(&mut self, id: SlotId, value: Constant) -> Result<(), StructureError> {
        self.check_kind(id, &value)?;
        self.assignment.insert(id, value);
        Ok(())
    }

    pub fn with_value(&self, id: SlotId, value: Constant) -> Result<QueryStructure, StructureError> {
        let mut s = self.clone();
        s.assign(id, value)?;
        Ok(s)
    }

    pub fn instantiate(&self) -> Result<Query, StructureError> {
        self.instantiate_with(&self.assignment)
    }

    pub fn instantiate_with(&self, assignment: &Assignment) -> Result<Query, StructureError> {
        let mut q = self.skeleton.clone();
        let mut err = None;
        let mut index = 0;
        for_each_constant(&mut q, |_, mut c| {
            let slot = &self.slots[index];
            index += 1;
            if err.is_some() {
                return;
            }
            match assignment.get(&slot.id) {
                None => err = Some(StructureError::MissingSlot(slot.id)),
                Some(v) => {
                    if let Err(m) = c.set(v) {
                        err = Some(StructureError::KindMismatch {
                            slot: slot.id,
                            expected: m.expected,
                            found: m.found.to_string(),
                        });
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(q),
        }
    }

    /// Instantiates what is assigned and leaves the rest blank.
    pub(crate) fn instantiate_partial(&self, assignment: &Assignment) -> Query {
        let mut q = self.skeleton.clone();
        let mut index = 0;
        for_each_constant(&mut q, |_, mut c| {
            let slot = &self.slots[index];
            index += 1;
            if let Some(v) = assignment.get(&slot.id) {
                let _ = c.set(v);
            }
        });
        q
    }
}

impl fmt::Display for QueryStructure {
    /// Prints the skeleton with `#id` in place of every constant.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = print_with(&self.skeleton, |i, _, out| {
            out.push_str(&self.slots[i].id.to_string());
        });
        f.write_str(&text)
    }
}
