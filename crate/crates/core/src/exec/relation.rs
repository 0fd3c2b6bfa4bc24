use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::value::{row_cmp, CellKey, Value};

/// A table of typed cells. `ordered` records whether row order is meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    #[serde(default)]
    pub ordered: bool,
}

impl Relation {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>, ordered: bool) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        Self { columns, rows, ordered }
    }

    pub fn empty(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new(), ordered: false }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes a header row followed by the rows. `NULL` is an empty field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::Null => String::new(),
                Value::Int(i) => i.to_string(),
                Value::Real(r) => format!("{r:?}"),
                Value::Text(s) => s.clone(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an untyped CSV (header required), inferring integer, real or text
    /// per cell; empty fields become `NULL`.
    pub fn read_csv<R: Read>(input: R, ordered: bool) -> Result<Relation, csv::Error> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(infer_cell).collect());
        }
        Ok(Relation { columns, rows, ordered })
    }
}

fn infer_cell(field: &str) -> Value {
    if field.is_empty() {
        Value::Null
    } else if let Ok(i) = field.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(r) = field.parse::<f64>() {
        if r.is_finite() {
            Value::Real(r)
        } else {
            Value::Text(field.to_string())
        }
    } else {
        Value::Text(field.to_string())
    }
}

/// Execution match: equal arity, then equal row sequences when `expected` is
/// ordered and equal row multisets otherwise. Column names are ignored and
/// integers compare equal to reals of the same value.
pub fn outputs_match(actual: &Relation, expected: &Relation) -> bool {
    if actual.arity() != expected.arity() || actual.len() != expected.len() {
        return false;
    }
    if expected.ordered {
        actual.rows.iter().zip(&expected.rows).all(|(a, b)| row_cmp(a, b).is_eq())
    } else {
        let mut a: Vec<&Vec<Value>> = actual.rows.iter().collect();
        let mut b: Vec<&Vec<Value>> = expected.rows.iter().collect();
        a.sort_by(|x, y| row_cmp(x, y));
        b.sort_by(|x, y| row_cmp(x, y));
        a.iter().zip(&b).all(|(x, y)| row_cmp(x, y).is_eq())
    }
}

/// Multiset of cell values keyed under output-comparison semantics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellMultiset {
    counts: BTreeMap<CellKey, usize>,
    total: usize,
}

impl CellMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: Value) {
        *self.counts.entry(CellKey(v)).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, v: &Value) -> usize {
        self.counts.get(&CellKey(v.clone())).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value, usize)> {
        self.counts.iter().map(|(k, n)| (&k.0, *n))
    }

    /// Size of the multiset intersection (per-value minimum multiplicity).
    pub fn intersection_size(&self, other: &CellMultiset) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() { (self, other) } else { (other, self) };
        small.counts.iter().map(|(k, n)| (*n).min(large.counts.get(k).copied().unwrap_or(0))).sum()
    }
}

impl FromIterator<Value> for CellMultiset {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut m = CellMultiset::new();
        for v in iter {
            m.insert(v);
        }
        m
    }
}

/// All cells of all rows, flattened.
pub fn multiset_values(rel: &Relation) -> CellMultiset {
    rel.rows.iter().flatten().cloned().collect()
}
