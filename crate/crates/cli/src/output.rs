//! Tabular output as RFC-4180 CSV or schema-versioned JSON.
//!
//! Infinite values are written as the marker string `inf`; NaN is never
//! written and aborts with a numerical failure.

use crate::config::Format;
use crate::error::CliError;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;
pub const INFINITY_MARKER: &str = "inf";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn check(&self) -> Result<(), CliError> {
        match self {
            Cell::Num(v) if v.is_nan() || *v == f64::NEG_INFINITY => {
                Err(CliError::Numerical(format!("refusing to emit {v}")))
            }
            _ => Ok(()),
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Num(v) if v.is_infinite() => INFINITY_MARKER.into(),
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_infinite() => json!(INFINITY_MARKER),
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Rows of one command's output, one per (grid point, method).
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, columns: Vec<&'static str>) -> Self {
        Self { command, columns, rows: Vec::new() }
    }

    pub fn render(&self, format: Format, parameters: &Value) -> Result<Vec<u8>, CliError> {
        for cell in self.rows.iter().flatten() {
            cell.check()?;
        }
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
                w.write_record(&self.columns).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).map_err(io)?;
                }
                w.into_inner().map_err(|e| CliError::Io(e.into_error()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": self.command,
                    "parameters": parameters,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_markers() {
        let mut t = Table::new("profile", vec!["epsilon", "delta", "method"]);
        t.rows.push(vec![Cell::Num(0.5), Cell::Num(f64::INFINITY), Cell::Text("a,b".into())]);
        let out = String::from_utf8(t.render(Format::Csv, &Value::Null).unwrap()).unwrap();
        assert_eq!(out, "epsilon,delta,method\n0.5,inf,\"a,b\"\n");
        t.rows.push(vec![Cell::Num(f64::NAN), Cell::Num(0.0), Cell::Text("x".into())]);
        assert!(matches!(t.render(Format::Json, &Value::Null), Err(CliError::Numerical(_))));
    }
}
