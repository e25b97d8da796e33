//! JSON and CSV emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A command result: a JSON document and the table used for CSV.
pub struct Report {
    pub document: Value,
    pub rows: Vec<Value>,
}

impl Report {
    pub fn new<D: Serialize, R: Serialize>(document: &D, rows: &[R]) -> Result<Self, CliError> {
        let err = |e: serde_json::Error| CliError::Numerical(format!("serialization: {e}"));
        Ok(Self {
            document: serde_json::to_value(document).map_err(err)?,
            rows: rows.iter().map(serde_json::to_value).collect::<Result<_, _>>().map_err(err)?,
        })
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let text = match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.document).expect("json values serialize");
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => csv_bytes(&self.rows)?,
        };
        match out {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => std::io::stdout().write_all(&text).map_err(|e| CliError::Io(e.to_string())),
        }
    }
}

/// Nested objects become dotted column names; arrays become
/// semicolon-separated cells.
fn flatten(prefix: &str, value: &Value, out: &mut Map<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => value.to_string(),
    }
}

fn csv_bytes(rows: &[Value]) -> Result<Vec<u8>, CliError> {
    let mut header: Vec<String> = Vec::new();
    let flat: Vec<Map<String, Value>> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            flatten("", r, &mut m);
            for k in m.keys() {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
            m
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for m in &flat {
        w.write_record(header.iter().map(|k| m.get(k).map(cell).unwrap_or_default())).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}
