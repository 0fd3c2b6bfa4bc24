use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::relation::Relation;
use super::schema::{ColumnType, Schema};
use super::LoadError;
use crate::value::Value;

/// Immutable in-memory database: a schema plus one relation per table.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    schema: Schema,
    contents: BTreeMap<String, Relation>,
}

impl Database {
    /// Validates `contents` against `schema`. Integer cells in real columns are
    /// widened; any other type disagreement is an error.
    pub fn new(schema: Schema, mut contents: BTreeMap<String, Relation>) -> Result<Database, LoadError> {
        let schema = schema.normalized()?;
        let mut checked = BTreeMap::new();
        for table in &schema.tables {
            let mut rel = contents.remove(&table.name).unwrap_or_else(|| Relation::empty(Vec::new()));
            if rel.columns.is_empty() && rel.rows.is_empty() {
                rel.columns = table.column_names().map(str::to_string).collect();
            }
            let names: Vec<String> = rel.columns.iter().map(|c| c.to_ascii_lowercase()).collect();
            let expected: Vec<&str> = table.column_names().collect();
            if names != expected {
                return Err(LoadError::Schema(format!(
                    "table {} has columns {:?}, schema declares {:?}",
                    table.name, names, expected
                )));
            }
            for (r, row) in rel.rows.iter_mut().enumerate() {
                if row.len() != table.columns.len() {
                    return Err(LoadError::Cell {
                        table: table.name.clone(),
                        row: r + 1,
                        column: String::new(),
                        message: format!("expected {} cells, found {}", table.columns.len(), row.len()),
                    });
                }
                for (cell, def) in row.iter_mut().zip(&table.columns) {
                    let ok = match (&*cell, def.ty) {
                        (Value::Null, _) => true,
                        (Value::Int(_), ColumnType::Integer) => true,
                        (Value::Real(_), ColumnType::Real) => true,
                        (Value::Int(i), ColumnType::Real) => {
                            *cell = Value::Real(*i as f64);
                            true
                        }
                        (Value::Text(_), ColumnType::Text) => true,
                        _ => false,
                    };
                    if !ok {
                        return Err(LoadError::Cell {
                            table: table.name.clone(),
                            row: r + 1,
                            column: def.name.clone(),
                            message: format!("{} value in {:?} column", cell.type_name(), def.ty),
                        });
                    }
                }
            }
            rel.columns = names;
            rel.ordered = false;
            checked.insert(table.name.clone(), rel);
        }
        if let Some(extra) = contents.keys().next() {
            return Err(LoadError::Schema(format!("contents for undeclared table {extra}")));
        }
        Ok(Database { schema, contents: checked })
    }

    /// Loads `schema.json` and one `<table>.csv` per table from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Database, LoadError> {
        let dir = dir.as_ref();
        let schema_path = dir.join("schema.json");
        let text = fs::read_to_string(&schema_path).map_err(|e| LoadError::io(&schema_path, e))?;
        let schema: Schema =
            serde_json::from_str(&text).map_err(|e| LoadError::Json { path: schema_path.clone(), source: e })?;
        let schema = schema.normalized()?;
        let mut contents = BTreeMap::new();
        for table in &schema.tables {
            let path = dir.join(format!("{}.csv", table.name));
            let data = fs::read(&path).map_err(|e| LoadError::io(&path, e))?;
            contents.insert(table.name.clone(), read_typed_csv(&data, table, &path)?);
        }
        Database::new(schema, contents)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn table(&self, name: &str) -> Option<&Relation> {
        self.contents.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.schema.tables.iter().map(|t| (t.name.as_str(), &self.contents[&t.name]))
    }
}

fn read_typed_csv(data: &[u8], table: &super::schema::TableDef, path: &Path) -> Result<Relation, LoadError> {
    let csv_err = |e: csv::Error| LoadError::Csv { path: path.to_path_buf(), source: e };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(data);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    // map schema column -> csv field index
    let mut index = Vec::with_capacity(table.columns.len());
    for def in &table.columns {
        match header.iter().position(|h| *h == def.name) {
            Some(i) => index.push(i),
            None => {
                return Err(LoadError::Schema(format!("{}: missing column {} in header", path.display(), def.name)))
            }
        }
    }
    if header.len() != table.columns.len() {
        return Err(LoadError::Schema(format!("{}: header {:?} does not match schema", path.display(), header)));
    }
    let mut rows = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut row = Vec::with_capacity(index.len());
        for (def, &i) in table.columns.iter().zip(&index) {
            let field = rec.get(i).unwrap_or("");
            let cell = match def.ty {
                ColumnType::Text => Ok(Value::Text(field.to_string())),
                _ if field.is_empty() => Ok(Value::Null),
                ColumnType::Integer => field.trim().parse::<i64>().map(Value::Int).map_err(|e| e.to_string()),
                ColumnType::Real => field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| e.to_string())
                    .and_then(|x| if x.is_finite() { Ok(Value::Real(x)) } else { Err("non-finite real".into()) }),
            }
            .map_err(|message| LoadError::Cell {
                table: table.name.clone(),
                row: r + 1,
                column: def.name.clone(),
                message,
            })?;
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(Relation::new(table.column_names().map(str::to_string).collect(), rows, false))
}
