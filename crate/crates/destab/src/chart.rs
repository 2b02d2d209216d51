//! Bigraded charts of spectral-sequence pages.
//!
//! A page `U_q(V)` is drawn with weight `w` in column `s = -w` and total
//! degree `t = w + n` on the vertical axis, `n` the internal degree.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hopfss::{page_series, BarcodeModule};

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("rows through t = {requested} requested, but the page is exact only through t = {exact}")]
    Inexact { requested: i64, exact: i64 },
    #[error("malformed chart: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartEntry {
    pub s: i64,
    pub t: i64,
    pub dim: u64,
}

/// Named primitives of column `column` (weight `2^column`) in internal
/// degree `degree`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartPrimitive {
    pub s: i64,
    pub t: i64,
    pub column: usize,
    pub degree: i64,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartTable {
    pub title: String,
    pub max_weight: u64,
    pub max_t: i64,
    pub entries: Vec<ChartEntry>,
    pub primitives: Vec<ChartPrimitive>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CsvRow {
    kind: String,
    s: Option<i64>,
    t: Option<i64>,
    dim: Option<u64>,
    column: Option<usize>,
    degree: Option<i64>,
    label: Option<String>,
}

impl ChartTable {
    /// Rows `t <= max_t` of `U_q(b)`, through weight `2^{top+1} - 1`.
    pub fn from_barcode(title: impl Into<String>, b: &BarcodeModule, max_t: i64) -> Result<ChartTable, ChartError> {
        let (series, exact) = page_series(b);
        // a row is exact once every positive weight lands in range
        let exact_t = exact.saturating_add(1);
        if max_t > exact_t {
            return Err(ChartError::Inexact { requested: max_t, exact: exact_t });
        }
        let entries = series
            .entries
            .iter()
            .filter(|(&(w, n), &d)| d > 0 && w as i64 + n <= max_t)
            .map(|(&(w, n), &dim)| ChartEntry { s: -(w as i64), t: w as i64 + n, dim })
            .collect();
        let mut primitives = Vec::new();
        for (k, col) in b.columns.iter().enumerate() {
            let w = 1i64 << k;
            if w as u64 > series.max_weight {
                continue;
            }
            for (&e, labels) in &col.labels {
                if w + e <= max_t && e <= col.bound && !labels.is_empty() {
                    primitives.push(ChartPrimitive { s: -w, t: w + e, column: k, degree: e, labels: labels.clone() });
                }
            }
        }
        Ok(ChartTable { title: title.into(), max_weight: series.max_weight, max_t, entries, primitives })
    }

    pub fn get(&self, s: i64, t: i64) -> u64 {
        self.entries.iter().find(|e| e.s == s && e.t == t).map_or(0, |e| e.dim)
    }

    /// Sum of the cells in row `t`.
    pub fn row_total(&self, t: i64) -> u64 {
        self.entries.iter().filter(|e| e.t == t).map(|e| e.dim).sum()
    }

    /// The nonzero cell with the smallest `t` in column `s`.
    pub fn bottom(&self, s: i64) -> Option<&ChartEntry> {
        self.entries.iter().filter(|e| e.s == s).min_by_key(|e| e.t)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let left = self.entries.iter().map(|e| e.s).min().unwrap_or(-1).min(-1);
        let columns: Vec<i64> = (left..=0).rev().collect();
        let cells: BTreeMap<(i64, i64), u64> = self.entries.iter().map(|e| ((e.s, e.t), e.dim)).collect();
        let width = columns
            .iter()
            .map(|s| s.to_string().len())
            .chain(self.entries.iter().map(|e| e.dim.to_string().len()))
            .max()
            .unwrap_or(1)
            + 1;
        let tw = self
            .entries
            .iter()
            .map(|e| e.t.to_string().len())
            .chain([1, self.max_t.to_string().len()])
            .max()
            .unwrap_or(1);
        let _ = write!(out, "{:>tw$} |", "t");
        for s in &columns {
            let _ = write!(out, "{s:>width$}");
        }
        out.push('\n');
        let _ = writeln!(out, "{}-+{}", "-".repeat(tw), "-".repeat(width * columns.len()));
        if let Some(bottom) = self.entries.iter().map(|e| e.t).min() {
            for t in (bottom..=self.max_t).rev() {
                let _ = write!(out, "{t:>tw$} |");
                for s in &columns {
                    match cells.get(&(*s, t)) {
                        Some(d) => {
                            let _ = write!(out, "{d:>width$}");
                        }
                        None => {
                            let _ = write!(out, "{:>width$}", "");
                        }
                    }
                }
                let row = out.trim_end_matches(' ').len();
                out.truncate(row);
                out.push('\n');
            }
        }
        if !self.primitives.is_empty() {
            out.push_str("primitives:\n");
            for p in &self.primitives {
                let _ = writeln!(out, "  ({}, {})  {}", p.s, p.t, p.labels.join(", "));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("charts serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ChartTable, ChartError> {
        serde_json::from_str(text).map_err(|e| ChartError::Malformed(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut rows = vec![
            CsvRow { kind: "title".into(), label: Some(self.title.clone()), ..CsvRow::default() },
            CsvRow { kind: "max_weight".into(), dim: Some(self.max_weight), ..CsvRow::default() },
            CsvRow { kind: "max_t".into(), t: Some(self.max_t), ..CsvRow::default() },
        ];
        for e in &self.entries {
            rows.push(CsvRow {
                kind: "entry".into(),
                s: Some(e.s),
                t: Some(e.t),
                dim: Some(e.dim),
                ..CsvRow::default()
            });
        }
        for p in &self.primitives {
            for l in &p.labels {
                rows.push(CsvRow {
                    kind: "primitive".into(),
                    s: Some(p.s),
                    t: Some(p.t),
                    column: Some(p.column),
                    degree: Some(p.degree),
                    label: Some(l.clone()),
                    ..CsvRow::default()
                });
            }
        }
        for r in &rows {
            w.serialize(r).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }

    pub fn from_csv(text: &str) -> Result<ChartTable, ChartError> {
        let bad = |what: &str| ChartError::Malformed(what.to_string());
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut table =
            ChartTable { title: String::new(), max_weight: 0, max_t: 0, entries: Vec::new(), primitives: Vec::new() };
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| ChartError::Malformed(e.to_string()))?;
            match row.kind.as_str() {
                "title" => table.title = row.label.unwrap_or_default(),
                "max_weight" => table.max_weight = row.dim.ok_or_else(|| bad("max_weight without dim"))?,
                "max_t" => table.max_t = row.t.ok_or_else(|| bad("max_t without t"))?,
                "entry" => table.entries.push(ChartEntry {
                    s: row.s.ok_or_else(|| bad("entry without s"))?,
                    t: row.t.ok_or_else(|| bad("entry without t"))?,
                    dim: row.dim.ok_or_else(|| bad("entry without dim"))?,
                }),
                "primitive" => {
                    let column = row.column.ok_or_else(|| bad("primitive without column"))?;
                    let degree = row.degree.ok_or_else(|| bad("primitive without degree"))?;
                    let label = row.label.ok_or_else(|| bad("primitive without label"))?;
                    match table.primitives.last_mut() {
                        Some(p) if p.column == column && p.degree == degree => p.labels.push(label),
                        _ => table.primitives.push(ChartPrimitive {
                            s: row.s.ok_or_else(|| bad("primitive without s"))?,
                            t: row.t.ok_or_else(|| bad("primitive without t"))?,
                            column,
                            degree,
                            labels: vec![label],
                        }),
                    }
                }
                other => return Err(ChartError::Malformed(format!("unknown row kind {other:?}"))),
            }
        }
        Ok(table)
    }
}
