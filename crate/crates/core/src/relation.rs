//! Flat tables: induced relations of traversal queries and analytic
//! answers, with CSV and JSON export.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use crate::error::Result;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    /// Display name, unique within the schema.
    pub name: String,
    /// Node whose values the column holds.
    pub attribute: String,
    /// Defining expression; absent for the key.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSchema {
    pub name: String,
    pub key: Column,
    pub columns: Vec<Column>,
}

impl RelationSchema {
    pub fn column_names(&self) -> Vec<&str> {
        std::iter::once(self.key.name.as_str())
            .chain(self.columns.iter().map(|c| c.name.as_str()))
            .collect()
    }
}

/// Rows hold the key value first, then one value per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub schema: RelationSchema,
    pub rows: Vec<Vec<Value>>,
}

/// A pair of rows breaking a functional dependency `key -> column`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdViolation {
    pub column: String,
    pub key: Value,
    pub first: Value,
    pub second: Value,
}

impl Relation {
    pub fn keys(&self) -> Vec<&Value> {
        self.rows.iter().map(|r| &r[0]).collect()
    }

    /// Check `key -> column` for every column over all row pairs.
    pub fn key_dependency_violations(&self) -> Vec<FdViolation> {
        let mut out = vec![];
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                if a[0] != b[0] {
                    continue;
                }
                for (c, col) in self.schema.columns.iter().enumerate() {
                    if a[c + 1] != b[c + 1] {
                        out.push(FdViolation {
                            column: col.name.clone(),
                            key: a[0].clone(),
                            first: a[c + 1].clone(),
                            second: b[c + 1].clone(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn row_set(&self) -> BTreeSet<Vec<Value>> {
        self.rows.iter().cloned().collect()
    }

    /// Keep the named columns, in the given order; the key always stays.
    pub fn project(&self, names: &[&str]) -> Option<Relation> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.schema.columns.iter().position(|c| c.name == *n))
            .collect::<Option<_>>()?;
        Some(Relation {
            schema: RelationSchema {
                name: self.schema.name.clone(),
                key: self.schema.key.clone(),
                columns: idx.iter().map(|&i| self.schema.columns[i].clone()).collect(),
            },
            rows: self
                .rows
                .iter()
                .map(|r| {
                    std::iter::once(r[0].clone())
                        .chain(idx.iter().map(|&i| r[i + 1].clone()))
                        .collect()
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> Json {
        json!({
            "schema": self.schema,
            "rows": self.rows.iter().map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self, header: bool) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(vec![]);
        if header {
            w.write_record(self.schema.column_names())?;
        }
        for row in &self.rows {
            w.write_record(row.iter().map(Value::to_cell))?;
        }
        let bytes = w.into_inner().map_err(|e| crate::error::Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(rows: Vec<Vec<Value>>) -> Relation {
        Relation {
            schema: RelationSchema {
                name: "R".into(),
                key: Column {
                    name: "K".into(),
                    attribute: "K".into(),
                    expr: None,
                },
                columns: vec![Column {
                    name: "A".into(),
                    attribute: "A".into(),
                    expr: Some("f".into()),
                }],
            },
            rows,
        }
    }

    #[test]
    fn csv_quotes_per_rfc4180() {
        let r = rel(vec![vec![Value::Int(1), Value::text("a,\"b\"")]]);
        assert_eq!(r.to_csv(true).unwrap(), "K,A\n1,\"a,\"\"b\"\"\"\n");
    }

    #[test]
    fn fd_checker_finds_conflicting_rows() {
        let ok = rel(vec![vec![Value::Int(1), Value::Int(2)], vec![Value::Int(2), Value::Int(2)]]);
        assert!(ok.key_dependency_violations().is_empty());
        let bad = rel(vec![vec![Value::Int(1), Value::Int(2)], vec![Value::Int(1), Value::Int(3)]]);
        assert_eq!(bad.key_dependency_violations().len(), 1);
    }
}
