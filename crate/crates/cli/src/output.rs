//! Tables written as CSV with a `#` comment preamble, or as JSON.

use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
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

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// 17 significant digits, enough to recover the `f64` exactly.
pub fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    /// Command that produced the table.
    pub command: &'static str,
    /// Comment lines above the CSV header; a `notes` array in JSON.
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Table {
            command,
            notes: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, cfg: &RunConfig) -> Result<()> {
        let bytes = match cfg.format {
            Format::Csv => self.to_csv(cfg)?,
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json(cfg))?;
                s.push('\n');
                s.into_bytes()
            }
        };
        match &cfg.output {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }

    fn to_csv(&self, cfg: &RunConfig) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# crofton-cli {}", self.command)?;
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        writeln!(out, "# [config]")?;
        for line in cfg.to_toml().lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    fn to_json(&self, cfg: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().zip(r).map(|(k, v)| (k.to_string(), v.json())).collect();
                Value::Object(m)
            })
            .collect();
        json!({
            "command": self.command,
            "config": cfg,
            "notes": self.notes,
            "rows": rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, -2.5e-300, 0.0] {
            assert_eq!(format_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_quotes_and_comments() {
        let mut t = Table::new("test", &["a", "b"]);
        t.note("hello");
        t.push(vec![Cell::Text("x, y".into()), Cell::Num(1.0)]);
        let s = String::from_utf8(t.to_csv(&RunConfig::default()).unwrap()).unwrap();
        assert!(s.starts_with("# crofton-cli test\n# hello\n# [config]\n"));
        assert!(s.ends_with("a,b\n\"x, y\",1.0000000000000000e0\n"));
    }
}
