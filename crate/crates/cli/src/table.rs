// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV tables. Reals are written with 17 significant digits, so reading a
//! file back and writing it again reproduces it byte for byte.

use std::fmt::Write as _;

/// One cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    fn render(&self, out: &mut String) {
        match self {
            Value::Int(v) => write!(out, "{v}").unwrap(),
            Value::Real(v) => write!(out, "{v:.16e}").unwrap(),
            Value::Text(s) => out.push_str(s),
        }
    }

    /// Reads a cell back; a cell is a real or an integer only if it renders
    /// to exactly the same text.
    fn parse(cell: &str) -> Value {
        if let Ok(v) = cell.parse::<f64>() {
            if format!("{v:.16e}") == cell {
                return Value::Real(v);
            }
        }
        if let Ok(v) = cell.parse::<i64>() {
            if v.to_string() == cell {
                return Value::Int(v);
            }
        }
        Value::Text(cell.to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            Value::Text(_) => None,
        }
    }
}

/// Header, rows, and trailing `#` report lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new(), notes: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                v.render(&mut out);
            }
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str("# ");
            out.push_str(note);
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Table, String> {
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().ok_or("empty CSV")?.split(',').map(str::to_string).collect();
        let mut table = Table::new(header);
        for (k, line) in lines.enumerate() {
            if let Some(note) = line.strip_prefix("# ") {
                table.notes.push(note.to_string());
                continue;
            }
            let row: Vec<Value> = line.split(',').map(Value::parse).collect();
            if row.len() != table.header.len() {
                return Err(format!("row {} has {} cells, header has {}", k + 1, row.len(), table.header.len()));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    /// Rows grouped by the integer `branch` column, in order of appearance.
    pub fn branches(&self) -> Vec<(i64, Vec<&Vec<Value>>)> {
        let Some(b) = self.column("branch") else {
            return vec![(0, self.rows.iter().collect())];
        };
        let mut out: Vec<(i64, Vec<&Vec<Value>>)> = Vec::new();
        for row in &self.rows {
            let id = match row[b] {
                Value::Int(v) => v,
                _ => -1,
            };
            match out.iter_mut().find(|(k, _)| *k == id) {
                Some((_, rows)) => rows.push(row),
                None => out.push((id, vec![row])),
            }
        }
        out
    }

    /// The named real columns of every row, grouped by branch.
    pub fn polylines(&self, columns: &[String]) -> Vec<Vec<Vec<f64>>> {
        let idx: Vec<usize> = columns.iter().filter_map(|c| self.column(c)).collect();
        if idx.len() != columns.len() {
            return Vec::new();
        }
        self.branches()
            .into_iter()
            .map(|(_, rows)| {
                rows.iter().map(|r| idx.iter().map(|&i| r[i].as_f64().unwrap_or(f64::NAN)).collect()).collect()
            })
            .collect()
    }
}
