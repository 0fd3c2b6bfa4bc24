//! Typed cell values shared by query literals and table contents.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// A single cell or literal.
///
/// The derived `PartialEq` is structural (`Int(2) != Real(2.0)`), which is what
/// AST comparisons want. Output comparison goes through [`Value::cell_cmp`] and
/// [`CellKey`], which coerce integers and reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Real(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Total order used for sorting, grouping and multiset keys:
    /// `NULL < numbers < text`, numbers compared by exact numeric value.
    pub fn cell_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Int(_) | Value::Real(_) => 1,
                Value::Text(_) => 2,
            }
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => norm_zero(*a).total_cmp(&norm_zero(*b)),
            (Value::Int(a), Value::Real(b)) => int_real_cmp(*a, *b),
            (Value::Real(a), Value::Int(b)) => int_real_cmp(*b, *a).reverse(),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Equality under [`Value::cell_cmp`]; `NULL` equals `NULL` here.
    pub fn same_cell(&self, other: &Value) -> bool {
        self.cell_cmp(other) == Ordering::Equal
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Text(_) => "text",
        }
    }
}

fn norm_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Returns `Some(i)` when `r` is exactly an `i64`.
fn exact_int(r: f64) -> Option<i64> {
    if r.fract() == 0.0 && (-9.223_372_036_854_776e18..9.223_372_036_854_776e18).contains(&r) {
        Some(r as i64)
    } else {
        None
    }
}

fn int_real_cmp(i: i64, r: f64) -> Ordering {
    if r.is_nan() {
        return Ordering::Less;
    }
    match exact_int(r) {
        Some(ri) => i.cmp(&ri),
        None => (i as f64).partial_cmp(&r).unwrap_or(Ordering::Less),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Text(s) => {
                f.write_str("'")?;
                f.write_str(&s.replace('\'', "''"))?;
                f.write_str("'")
            }
        }
    }
}

/// Owned value wrapper whose `Eq`/`Ord`/`Hash` follow [`Value::cell_cmp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellKey(pub Value);

impl PartialEq for CellKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.same_cell(&other.0)
    }
}

impl Eq for CellKey {}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cell_cmp(&other.0)
    }
}

impl Hash for CellKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        hash_cell(&self.0, state)
    }
}

pub(crate) fn hash_cell<H: Hasher>(v: &Value, state: &mut H) {
    match v {
        Value::Null => 0u8.hash(state),
        Value::Int(i) => {
            1u8.hash(state);
            i.hash(state);
        }
        Value::Real(r) => match exact_int(*r) {
            Some(i) => {
                1u8.hash(state);
                i.hash(state);
            }
            None => {
                2u8.hash(state);
                r.to_bits().hash(state);
            }
        },
        Value::Text(s) => {
            3u8.hash(state);
            s.hash(state);
        }
    }
}

/// Borrowed row key for hashing whole rows under cell semantics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RowKey<'a>(pub &'a [Value]);

impl PartialEq for RowKey<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(other.0).all(|(a, b)| a.same_cell(b))
    }
}

impl Eq for RowKey<'_> {}

impl Hash for RowKey<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.len().hash(state);
        for v in self.0 {
            hash_cell(v, state);
        }
    }
}

pub(crate) fn row_cmp(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cell_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
