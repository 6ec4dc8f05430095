//! Deviation reports between two trace files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use photonet::trace::{compare, ColumnDeviation, TraceTable};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnReport {
    #[serde(flatten)]
    pub deviation: ColumnDeviation,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub a: String,
    pub b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub columns: Vec<ColumnReport>,
    pub diverged: bool,
}

/// Columns that are diagnostics rather than physical observables.
const DIAGNOSTIC: [&str; 2] = ["residual", "one_sided"];

pub fn compare_tables(a: &TraceTable, b: &TraceTable, tolerance: Option<f64>) -> Result<Vec<ColumnReport>> {
    Ok(compare(a, b)?
        .into_iter()
        .map(|d| {
            let checked = !DIAGNOSTIC.contains(&d.column.as_str());
            let diverged = checked && tolerance.is_some_and(|tol| d.l2.is_nan() || d.l2 > tol);
            ColumnReport { deviation: d, diverged }
        })
        .collect())
}

fn read(path: &Path) -> Result<TraceTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    TraceTable::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Compares `a` against the reference `b`; a column diverges when its relative L2
/// deviation exceeds `tolerance`.
pub fn compare_files(a: &Path, b: &Path, tolerance: Option<f64>) -> Result<CompareReport> {
    let columns = compare_tables(&read(a)?, &read(b)?, tolerance)?;
    Ok(CompareReport {
        a: a.display().to_string(),
        b: b.display().to_string(),
        tolerance,
        diverged: columns.iter().any(|c| c.diverged),
        columns,
    })
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>12} {:>12}", "column", "linf", "l2");
        for c in &self.columns {
            let flag = if c.diverged { "  DIVERGED" } else { "" };
            let _ = writeln!(
                out,
                "{:<16} {:>12.4e} {:>12.4e}{flag}",
                c.deviation.column, c.deviation.linf, c.deviation.l2
            );
        }
        if let Some(tol) = self.tolerance {
            let verdict = if self.diverged { "diverged" } else { "within tolerance" };
            let _ = writeln!(out, "relative L2 tolerance {tol:e}: {verdict}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(scale: f64) -> TraceTable {
        TraceTable {
            method: "exact".into(),
            columns: vec!["t".into(), "n_0".into(), "residual".into()],
            rows: (0..4).map(|k| vec![k as f64, scale * (1.0 + k as f64), scale]).collect(),
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let r = compare_tables(&table(1.0), &table(1.0), Some(0.0)).unwrap();
        assert!(r.iter().all(|c| c.deviation.l2 == 0.0 && c.deviation.linf == 0.0 && !c.diverged));
    }

    #[test]
    fn divergence_ignores_diagnostics() {
        let r = compare_tables(&table(2.0), &table(1.0), Some(0.1)).unwrap();
        assert!(r[0].diverged);
        assert!(!r[1].diverged);
        assert!(compare_tables(&table(1.1), &table(1.0), None).unwrap().iter().all(|c| !c.diverged));
    }
}
