//! Output rendering: CSV tables with a comment metadata preamble, or a
//! single nested JSON object. Both renderings are deterministic — the only
//! inputs are the resolved configuration and the computed results.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::CliError;

/// Serialize a float with 17 significant digits, enough to round-trip any
/// f64 exactly.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => fmt_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(t) => {
                if t.contains([',', '"', '\n']) {
                    format!("\"{}\"", t.replace('"', "\"\""))
                } else {
                    t.clone()
                }
            }
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A named CSV table: header row plus data rows.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Ordered metadata echoed into every output: the resolved model
/// parameters, tolerances, and tool version.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    pub entries: Vec<(String, String)>,
}

impl Meta {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(map)
    }
}

/// A complete command result, renderable as CSV or JSON.
#[derive(Debug, Clone)]
pub struct Document {
    pub meta: Meta,
    /// CSV rendering: one or more tables, separated by blank-line pairs so
    /// plotting tools can address them as indexed blocks.
    pub tables: Vec<Table>,
    /// JSON rendering: the nested result payload (combined with the meta
    /// block at the top level).
    pub payload: Value,
}

impl Document {
    pub fn render(&self, format: crate::config::OutputFormat) -> String {
        match format {
            crate::config::OutputFormat::Csv => self.render_csv(),
            crate::config::OutputFormat::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta.entries {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for (i, table) in self.tables.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&format!("# table = {}\n", table.name));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::render).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        out
    }

    fn render_json(&self) -> String {
        let mut top = serde_json::Map::new();
        top.insert("meta".to_string(), self.meta.to_json());
        if let Value::Object(fields) = &self.payload {
            for (k, v) in fields {
                top.insert(k.clone(), v.clone());
            }
        } else {
            top.insert("result".to_string(), self.payload.clone());
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(top))
            .expect("JSON serialization of plain data cannot fail");
        text.push('\n');
        text
    }
}

/// Write to the chosen destination: `--out` path or standard output.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Config(format!("cannot write output file {}: {e}", path.display()))
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::Config(format!("cannot write to standard output: {e}")))
        }
    }
}

/// Convenience: a JSON payload with a single key.
pub fn payload(key: &str, value: Value) -> Value {
    json!({ key: value })
}
