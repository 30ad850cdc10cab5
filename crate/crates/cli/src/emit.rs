//! Deterministic CSV/JSON emission: fixed column order, 17-significant-digit
//! floats, byte-identical output for identical inputs.

use crate::scenario::Scenario;
use rabi_sim::Result;
use serde::Serialize;
use std::fs;
use std::io::Write;

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Write `{prefix}.csv` and/or `{prefix}.json` per the scenario's format;
/// the JSON mirror embeds the resolved scenario for reproducibility.
pub fn emit<T: Serialize>(scenario: &Scenario, table: &Table, results: &T) -> Result<Vec<String>> {
    let mut written = Vec::new();
    if let Some(parent) = std::path::Path::new(&scenario.output).parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    if scenario.format == "csv" || scenario.format == "both" {
        let path = format!("{}.csv", scenario.output);
        let mut f = fs::File::create(&path)?;
        f.write_all(table.render().as_bytes())?;
        written.push(path);
    }
    if scenario.format == "json" || scenario.format == "both" {
        let path = format!("{}.json", scenario.output);
        let mirror = serde_json::json!({
            "scenario": scenario,
            "results": results,
        });
        let mut body = serde_json::to_string_pretty(&mirror)
            .expect("results serialize");
        body.push('\n');
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
