//! Frozen rate exponents for the singular corpus members.
//!
//! The table lives in `data/calibration.csv` and is regenerated with
//! `bbar calibrate`. Each row is the direct-rate slope fitted at large `n`
//! on a dense grid.

use serde::Serialize;

const TABLE: &str = include_str!("../data/calibration.csv");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub function: String,
    pub xi: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub alpha0: f64,
}

/// Parses rows of `function,xi,alpha,lambda,alpha0`; `#` starts a comment.
pub fn parse(text: &str) -> Vec<CalibrationEntry> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .filter_map(|l| {
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return None;
            }
            Some(CalibrationEntry {
                function: cols[0].to_string(),
                xi: cols[1].parse().ok()?,
                alpha: cols[2].parse().ok()?,
                lambda: cols[3].parse().ok()?,
                alpha0: cols[4].parse().ok()?,
            })
        })
        .collect()
}

pub fn entries() -> Vec<CalibrationEntry> {
    parse(TABLE)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

pub fn lookup(function: &str, xi: f64, alpha: f64, lambda: f64) -> Option<f64> {
    entries()
        .into_iter()
        .find(|e| e.function == function && close(e.xi, xi) && close(e.alpha, alpha) && close(e.lambda, lambda))
        .map(|e| e.alpha0)
}

/// Comment block at the top of the table file.
pub const HEADER: &str = "\
# Frozen direct-rate exponents for the singular corpus members.
# Regenerate with: bbar calibrate --output crates/core/data/calibration.csv
# Each alpha0 is the slope of log max_x w|f - Bbar_n f| against
# log(n^(-1/2) phi^(-lambda)(x) delta_n(x)) at the representative point with
# the largest phi, over n = 1024..16384 on an 8193-point Chebyshev grid.
# function,xi,alpha,lambda,alpha0
";

/// Header plus rows: the full file.
pub fn render_table(entries: &[CalibrationEntry]) -> String {
    format!("{HEADER}{}", render(entries))
}

/// Renders entries in the on-disk format.
pub fn render(entries: &[CalibrationEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("{},{},{},{},{:.6}\n", e.function, e.xi, e.alpha, e.lambda, e.alpha0))
        .collect()
}
