//! Mutation-based repair of SQL queries against an input-output example.

pub mod exec;
pub mod harness;
pub mod mutate;
pub mod search;
pub mod sql;
pub mod value;

pub use exec::{execute, outputs_match, Database, Relation};
pub use sql::{parse, print, Query};
pub use value::Value;
