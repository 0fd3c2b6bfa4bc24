use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::LoadError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
    Text,
}

impl ColumnType {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Integer | ColumnType::Real)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn column(&self, name: &str) -> Option<(usize, &ColumnDef)> {
        self.columns.iter().enumerate().find(|(_, c)| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

/// `from` and `to` are `table.column` references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub tables: Vec<TableDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foreign_keys: Vec<ForeignKey>,
}

impl Schema {
    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Lowercases identifiers and checks name uniqueness and foreign keys.
    pub fn normalized(mut self) -> Result<Schema, LoadError> {
        let mut seen = HashSet::new();
        for t in &mut self.tables {
            t.name = t.name.to_ascii_lowercase();
            if !seen.insert(t.name.clone()) {
                return Err(LoadError::Schema(format!("duplicate table {}", t.name)));
            }
            let mut cols = HashSet::new();
            for c in &mut t.columns {
                c.name = c.name.to_ascii_lowercase();
                if !cols.insert(c.name.clone()) {
                    return Err(LoadError::Schema(format!("duplicate column {}.{}", t.name, c.name)));
                }
            }
        }
        for fk in &mut self.foreign_keys {
            fk.from = fk.from.to_ascii_lowercase();
            fk.to = fk.to.to_ascii_lowercase();
            for side in [&fk.from, &fk.to] {
                let ok = side
                    .split_once('.')
                    .and_then(|(t, c)| self.tables.iter().find(|d| d.name == t).and_then(|d| d.column(c)))
                    .is_some();
                if !ok {
                    return Err(LoadError::Schema(format!("foreign key names unknown column {side}")));
                }
            }
        }
        Ok(self)
    }
}
