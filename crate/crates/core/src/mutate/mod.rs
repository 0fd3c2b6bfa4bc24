//! Candidate values per placeholder, WHERE-bound history, structural variants
//! and mutation application.

mod domain;
mod history;
mod structural;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::structure::{QueryStructure, SlotId, StructureError};
use crate::sql::{Constant, Query};

pub use domain::{candidate_domain, join_tables, question_literals, DomainContext, DEFAULT_MAX_LIMIT};
pub use history::{history_operator, update_history, Bounds, WhereHistory};
pub use structural::{
    apply_edit, edited_structure, fresh_fills, graft, structural_variants, EditVariant, StructuralEdit,
    StructuralVariant,
};

pub(crate) use domain::{column_type, level};
pub(crate) use history::record as record_history;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MutateError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("edit not applicable: {0}")]
    NotApplicable(&'static str),
}

/// One step of a repair path. Slot ids refer to the structure extracted from
/// the query the step is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mutation {
    Constant { slot: SlotId, value: Constant },
    Structural { edit: StructuralEdit },
}

impl Mutation {
    pub fn is_structural(&self) -> bool {
        matches!(self, Mutation::Structural { .. })
    }
}

/// Reassigns one slot, or grafts an edit whose fresh slots are all filled,
/// and instantiates the result.
pub fn apply_mutation(structure: &QueryStructure, m: &Mutation) -> Result<Query, MutateError> {
    match m {
        Mutation::Constant { slot, value } => Ok(structure.with_value(*slot, value.clone())?.instantiate()?),
        Mutation::Structural { edit } => Ok(apply_edit(structure, edit)?.instantiate()?),
    }
}

/// Replays a path of mutations from `query`.
pub fn apply_path(query: &Query, path: &[Mutation]) -> Result<Query, MutateError> {
    let mut q = query.clone();
    for m in path {
        q = apply_mutation(&crate::sql::extract_structure(&q), m)?;
    }
    Ok(q)
}
