//! Log-log least squares and the trend rule used for "bounded over the sweep".

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Compensated;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest `|fit - data|` in log space.
    pub residual: f64,
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<Fit> {
    let usable = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .count();
    if pairs.len() < 3 || usable < pairs.len() {
        return Err(Error::InsufficientData {
            needed: 3.max(pairs.len()),
            got: usable,
        });
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).collect::<Compensated<f64>>().value() / m;
    let my = logs.iter().map(|p| p.1).collect::<Compensated<f64>>().value() / m;
    let mut sxy = Compensated::new();
    let mut sxx = Compensated::new();
    for (lx, ly) in &logs {
        sxy.add((lx - mx) * (ly - my));
        sxx.add((lx - mx) * (lx - mx));
    }
    if sxx.value() == 0.0 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: 1,
        });
    }
    let slope = sxy.value() / sxx.value();
    let intercept = my - slope * mx;
    let residual = logs
        .iter()
        .map(|(lx, ly)| (intercept + slope * lx - ly).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

/// Thresholds for calling a ratio sequence bounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendRule {
    pub slope_min: f64,
    pub slope_max: f64,
    pub spread_max: f64,
}

impl Default for TrendRule {
    fn default() -> Self {
        Self {
            slope_min: f64::NEG_INFINITY,
            slope_max: 0.15,
            spread_max: 2.5,
        }
    }
}

impl TrendRule {
    pub fn with_slope_range(slope_min: f64, slope_max: f64) -> Self {
        Self {
            slope_min,
            slope_max,
            ..Self::default()
        }
    }
}

/// Trend of a ratio sequence over a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    /// Log-log slope against the sweep parameter; `None` when every value is 0.
    pub slope: Option<f64>,
    pub residual: Option<f64>,
    /// `max / median` over the whole sweep.
    pub max_over_median: f64,
    /// `max / median` with the max taken over the upper half of the sweep.
    pub tail_max_over_median: f64,
    pub rule: TrendRule,
    pub bounded: bool,
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn spread(max: f64, med: f64) -> f64 {
    if max == 0.0 {
        1.0
    } else if med == 0.0 {
        f64::INFINITY
    } else {
        max / med
    }
}

/// Applies `rule` to `(parameter, value)` pairs sorted by parameter.
///
/// A sequence that is identically zero is bounded. Otherwise every value must
/// be positive, the fitted slope must lie in the rule's range, and the largest
/// value over the upper half of the sweep may exceed the median by at most
/// `spread_max`. A sequence that decays is bounded however large its first
/// entries are, so the spread check looks only at the large-parameter end.
pub fn assess_trend(pairs: &[(f64, f64)], rule: TrendRule) -> Trend {
    let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let med = if sorted.is_empty() { 0.0 } else { median(&sorted) };
    let max = sorted.last().copied().unwrap_or(0.0);
    let tail = values[values.len() / 2..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let mut trend = Trend {
        slope: None,
        residual: None,
        max_over_median: spread(max, med),
        tail_max_over_median: spread(tail, med),
        rule,
        bounded: false,
    };
    if values.iter().all(|v| *v == 0.0) {
        trend.bounded = true;
        return trend;
    }
    if let Ok(fit) = fit_rate(pairs) {
        trend.slope = Some(fit.slope);
        trend.residual = Some(fit.residual);
        trend.bounded = fit.slope >= rule.slope_min
            && fit.slope <= rule.slope_max
            && trend.tail_max_over_median <= rule.spread_max;
    }
    trend
}
