//! CSV writers for experiment outputs.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Formats a float so that it parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One plotted curve: `(x, median, q25, q75)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

pub fn write_curve(dir: &Path, figure: &str, curve: &Curve) -> Result<()> {
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|&(x, m, a, b)| vec![num(x), num(m), num(a), num(b)])
        .collect();
    write_csv(&dir.join(format!("{figure}_{}.csv", curve.name)), &["x", "median", "q25", "q75"], &rows)
}
