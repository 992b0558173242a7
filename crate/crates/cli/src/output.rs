//! Result files.
//!
//! CSV: `#`-prefixed header lines (format tag, seed, resolved config as compact JSON),
//! then one header row and the data rows. Nothing run-specific is written, so reruns
//! with the same config and seed are byte-identical.
//!
//! JSON: the same content plus a `metadata` object holding the wall time, worker count
//! and crate version. Non-finite numbers become `null`.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

pub const OUTPUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // Debug switches to exponent notation for very small or large magnitudes
            Self::F(x) => format!("{x:?}"),
            Self::U(x) => x.to_string(),
            Self::S(s) => s.clone(),
            Self::B(b) => b.to_string(),
            Self::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::F(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Self::U(x) => json!(x),
            Self::S(s) => json!(s),
            Self::B(b) => json!(b),
            Self::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::U(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Self::U(x as u64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::U(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Self::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Self::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Self::S(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Self::Empty, Into::into)
    }
}

/// A command result: a table plus optional structured detail for JSON output.
pub struct Output {
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub detail: Option<Value>,
}

impl Output {
    pub fn new(command: &'static str, seed: u64, config: &impl Serialize, columns: &[&'static str]) -> Self {
        Self {
            command,
            seed,
            config: serde_json::to_value(config).expect("config serializes"),
            columns: columns.to_vec(),
            rows: Vec::new(),
            detail: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Long-format `section,key,value` row.
    pub fn kv(&mut self, section: &str, key: &str, value: impl Into<Cell>) {
        self.push(vec![section.into(), key.into(), value.into()]);
    }

    fn tag(&self) -> String {
        format!("dnaexp-{}", self.command)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        writeln!(buf, "# format: {}/{OUTPUT_VERSION}", self.tag())?;
        writeln!(buf, "# seed: {}", self.seed)?;
        writeln!(buf, "# config: {}", self.config)?;
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    pub fn to_json(&self, workers: usize, wall_time_secs: f64) -> Vec<u8> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let mut doc = json!({
            "format": self.tag(),
            "version": OUTPUT_VERSION,
            "seed": self.seed,
            "config": self.config,
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(d) = &self.detail {
            doc["detail"] = d.clone();
        }
        doc["metadata"] = json!({
            "crate_version": env!("CARGO_PKG_VERSION"),
            "workers": workers,
            "wall_time_secs": wall_time_secs,
            "unix_time": unix_time,
        });
        let mut out = serde_json::to_vec_pretty(&doc).expect("json value serializes");
        out.push(b'\n');
        out
    }

    pub fn write(&self, format: Format, out: Option<&Path>, workers: usize, wall: f64) -> Result<(), CliError> {
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => self.to_json(workers, wall),
        };
        match out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}
