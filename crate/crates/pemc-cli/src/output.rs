//! Tabular results with metadata, written as CSV (plus a JSON sidecar) or JSON.

use clap::ValueEnum;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // shortest representation that reads back to the same value
            Cell::Num(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format!("{v:?}")),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// A result table with its provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub metadata: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// material that does not fit the table (per-n terms, convergence data)
    pub extra: Value,
}

impl Dataset {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Map::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            extra: Value::Null,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, v: Value) {
        self.metadata.insert(key.into(), v);
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        json!({ "metadata": self.metadata, "columns": self.columns, "rows": rows, "extra": self.extra })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = out;
        for (k, v) in &self.metadata {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write to `path` or stdout. CSV files get a `.json` sidecar next to them.
    pub fn emit(&self, path: Option<&Path>, format: Format) -> std::io::Result<Vec<PathBuf>> {
        let json_text = |v: &Value| serde_json::to_string_pretty(v).expect("serializable") + "\n";
        match (path, format) {
            (None, Format::Csv) => {
                self.write_csv(std::io::stdout().lock())?;
                Ok(vec![])
            }
            (None, Format::Json) => {
                std::io::stdout().lock().write_all(json_text(&self.to_json()).as_bytes())?;
                Ok(vec![])
            }
            (Some(p), Format::Json) => {
                std::fs::write(p, json_text(&self.to_json()))?;
                Ok(vec![p.to_path_buf()])
            }
            (Some(p), Format::Csv) => {
                self.write_csv(std::fs::File::create(p)?)?;
                let mut side = p.as_os_str().to_owned();
                side.push(".json");
                let side = PathBuf::from(side);
                std::fs::write(&side, json_text(&self.to_json()))?;
                Ok(vec![p.to_path_buf(), side])
            }
        }
    }
}
