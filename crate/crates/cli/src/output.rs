//! Result tables and the metadata bundle written by every subcommand.
//!
//! One file per table, scale as the first column where applicable. CSV
//! cells use shortest-round-trip float formatting, so CSV and JSON
//! outputs carry identical numeric values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use scalereg_core::Result;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Float(f64),
    /// Explicitly absent value (e.g. undefined slope or elasticity).
    Absent,
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn opt(value: Option<f64>) -> Cell {
        match value {
            Some(v) => Cell::Float(v),
            None => Cell::Absent,
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v}"),
            Cell::Absent => String::new(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Absent => Value::Null,
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.clone(), cell.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "table": self.name, "rows": rows })
    }
}

/// Everything a command run produces: tables plus a metadata block whose
/// config echo and seed are sufficient to reproduce the run.
pub struct ResultBundle {
    pub tables: Vec<Table>,
    pub metadata: Value,
}

impl ResultBundle {
    /// Writes one file per table plus `metadata.json`; returns the paths.
    pub fn write(&self, out_dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut paths = Vec::new();
        for table in &self.tables {
            let path = out_dir.join(format!("{}.{}", table.name, format.extension()));
            match format {
                OutputFormat::Csv => table.write_csv(&path)?,
                OutputFormat::Json => {
                    let mut file = fs::File::create(&path)?;
                    writeln!(file, "{:#}", table.to_json())?;
                }
            }
            paths.push(path);
        }
        let meta_path = out_dir.join("metadata.json");
        let mut file = fs::File::create(&meta_path)?;
        writeln!(file, "{:#}", self.metadata)?;
        paths.push(meta_path);
        Ok(paths)
    }
}
