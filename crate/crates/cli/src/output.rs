// Copyright 2026 The twotier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! CSV and JSON rendering with a provenance header.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::run::{Cell, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Metadata {
    pub fn new(command: &str, canonical_config: &str, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            seed,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_number(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => csv_field(s),
        Cell::Empty => String::new(),
    }
}

pub fn render_csv(report: &Report, meta: &Metadata) -> String {
    let mut out = String::new();
    out.push_str(&format!("# tool: {} {}\n", meta.tool, meta.version));
    out.push_str(&format!("# command: {}\n", meta.command));
    out.push_str(&format!("# config_sha256: {}\n", meta.config_sha256));
    match meta.seed {
        Some(s) => out.push_str(&format!("# seed: {s}\n")),
        None => out.push_str("# seed: none\n"),
    }
    out.push_str(&report.table.columns.join(","));
    out.push('\n');
    for row in &report.table.rows {
        let cells: Vec<String> = row.iter().map(cell_text).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(x) if x.is_finite() => json!(x),
        Cell::Num(x) => json!(format_number(*x)),
        Cell::Int(i) => json!(i),
        Cell::Text(s) => json!(s),
        Cell::Empty => Value::Null,
    }
}

pub fn render_json(report: &Report, meta: &Metadata) -> String {
    let rows: Vec<Value> = report
        .table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(cell_json).collect()))
        .collect();
    let doc = json!({
        "metadata": {
            "tool": meta.tool,
            "version": meta.version,
            "command": meta.command,
            "config_sha256": meta.config_sha256,
            "seed": meta.seed,
        },
        "columns": report.table.columns,
        "rows": rows,
        "gate_failed": report.gate_failed,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(report: &Report, meta: &Metadata, format: Format) -> String {
    match format {
        Format::Csv => render_csv(report, meta),
        Format::Json => render_json(report, meta),
    }
}
