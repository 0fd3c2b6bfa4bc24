//! Parsing, printing and abstraction of SQL queries.

pub mod ast;
pub mod distance;
pub mod parse;
pub mod print;
pub mod sites;
pub mod structure;

pub use ast::{AggArg, AggFunc, CmpOp, ColumnRef, Expr, Join, Operand, OrderItem, Predicate, Query, SetOp, SetOpKind, SortDir};
pub use distance::{edit_distance, normalize_for_distance};
pub use parse::{parse, parse_with_holes, ParseError};
pub use print::print;
pub use sites::{Clause, Constant, KeywordContext, ValueKind};
pub use structure::{
    extract_structure, instantiate, structures_equal, Assignment, PlaceholderSlot, QueryStructure, SlotId,
    StructureError,
};
