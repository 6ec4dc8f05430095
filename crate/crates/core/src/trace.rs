//! Versioned CSV traces shared by the exact and Born–Markov pipelines.
//!
//! Layout: one comment line `# photonet trace schema=<v>`, a header row starting with
//! `method`, then one row per output time. Floats use 17 significant digits.

use std::fmt::Write as _;

use serde::Serialize;

use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# photonet trace schema=";

/// Fixed 17-significant-digit rendering used by every CSV writer.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub method: String,
    /// Numeric column names; the first is always `t`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}{SCHEMA_VERSION}");
        let _ = writeln!(out, "method,{}", self.columns.join(","));
        for row in &self.rows {
            out.push_str(&self.method);
            for x in row {
                out.push(',');
                out.push_str(&format_float(*x));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let magic = lines.next().ok_or_else(|| Error::Trace("empty trace".into()))?;
        let version = magic
            .strip_prefix(MAGIC)
            .ok_or_else(|| Error::Trace("missing schema comment".into()))?;
        if version.trim() != SCHEMA_VERSION.to_string() {
            return Err(Error::Trace(format!("unsupported schema version {version}")));
        }
        let header = lines.next().ok_or_else(|| Error::Trace("missing header row".into()))?;
        let mut names = header.split(',');
        if names.next() != Some("method") {
            return Err(Error::Trace("first column must be `method`".into()));
        }
        let columns: Vec<String> = names.map(str::to_owned).collect();
        if columns.first().map(String::as_str) != Some("t") {
            return Err(Error::Trace("second column must be `t`".into()));
        }
        let mut method: Option<String> = None;
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let m = cells.next().unwrap_or_default();
            match &method {
                None => method = Some(m.to_owned()),
                Some(prev) if prev != m => {
                    return Err(Error::Trace(format!("row {}: mixed methods", k + 1)));
                }
                _ => {}
            }
            let row = cells
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Trace(format!("row {}: {e}", k + 1)))?;
            if row.len() != columns.len() {
                return Err(Error::Trace(format!(
                    "row {}: expected {} values, found {}",
                    k + 1,
                    columns.len(),
                    row.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self {
            method: method.unwrap_or_default(),
            columns,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnDeviation {
    pub column: String,
    /// `max|a − b| / max|b|`.
    pub linf: f64,
    /// `‖a − b‖₂ / ‖b‖₂`.
    pub l2: f64,
}

/// Per-column relative deviations of `a` from the reference `b`.
pub fn compare(a: &TraceTable, b: &TraceTable) -> Result<Vec<ColumnDeviation>> {
    if a.columns != b.columns {
        return Err(Error::Trace("column schemas differ".into()));
    }
    if a.rows.len() != b.rows.len() {
        return Err(Error::Trace(format!(
            "time grids differ: {} vs {} rows",
            a.rows.len(),
            b.rows.len()
        )));
    }
    for (k, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        let scale = ra[0].abs().max(rb[0].abs()).max(1.0);
        if (ra[0] - rb[0]).abs() > 1e-12 * scale {
            return Err(Error::Trace(format!("time grids differ at row {}", k + 1)));
        }
    }
    Ok((1..a.columns.len())
        .map(|c| {
            let (mut diff_max, mut ref_max, mut diff_sq, mut ref_sq) = (0.0f64, 0.0f64, 0.0, 0.0);
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                let d = ra[c] - rb[c];
                diff_max = diff_max.max(d.abs());
                ref_max = ref_max.max(rb[c].abs());
                diff_sq += d * d;
                ref_sq += rb[c] * rb[c];
            }
            ColumnDeviation {
                column: a.columns[c].clone(),
                linf: relative(diff_max, ref_max),
                l2: relative(diff_sq.sqrt(), ref_sq.sqrt()),
            }
        })
        .collect())
}

fn relative(diff: f64, reference: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        diff / reference
    }
}
