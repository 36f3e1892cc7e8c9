use rayon::prelude::*;

use crate::basis::{basis_eval, central_moment_sum, inverse_moment_sum, BasisPoint, MomentQuery};
use crate::bridge::{compute_nodes, linear_joiner};
use crate::error::{Error, Result};
use crate::operator::{build_surrogate, operator_grid, phi_pow, weighted_second_derivative_norm};
use crate::scalar::Compensated;
use crate::weight::{delta_n, phi, weighted_sup_over, SingularWeight, TestFunction};

use super::{sup_with_arg, BoundedReport, RatioRow, SweepSpec, TrendRule};

/// Indices `k` with `|k - n xi| <= sqrt(n)`.
fn near_indices(n: usize, xi: f64) -> std::ops::RangeInclusive<usize> {
    let (c, r) = (n as f64 * xi, (n as f64).sqrt());
    let lo = (c - r).ceil().max(0.0) as usize;
    let hi = ((c + r).floor() as usize).min(n);
    lo..=hi
}

/// `w(x) sum_{|k - n xi| <= sqrt(n)} p_{n,k}(x)`.
pub fn lemma5_quantity(n: usize, w: &SingularWeight<f64>, x: f64) -> Result<f64> {
    lemma6_quantity(n, w, 0.0, x)
}

/// `w(x) sum_{|k - n xi| <= sqrt(n)} |k - n x|^beta p_{n,k}(x)`.
pub fn lemma6_quantity(n: usize, w: &SingularWeight<f64>, beta: f64, x: f64) -> Result<f64> {
    let weight = w.eval(x)?;
    if weight == 0.0 {
        return Ok(0.0);
    }
    let nx = n as f64 * x;
    let mut acc = Compensated::new();
    for k in near_indices(n, w.xi) {
        let p = basis_eval(BasisPoint::new(n, k, x)?);
        let d = (k as f64 - nx).abs();
        acc.add(if beta == 0.0 { p } else { d.powf(beta) * p });
    }
    Ok(weight * acc.value())
}

fn sweep_rows(
    spec: &SweepSpec,
    pts_for: impl Fn(usize) -> Vec<f64>,
    ratio: impl Fn(usize, f64) -> Result<(f64, f64)> + Sync,
) -> Result<Vec<RatioRow>> {
    spec.validate()?;
    spec.n_values
        .iter()
        .map(|&n| {
            let pts = pts_for(n);
            let vals: Vec<(f64, f64)> = pts.par_iter().map(|&x| ratio(n, x)).collect::<Result<_>>()?;
            let mut row = RatioRow {
                n,
                value: 0.0,
                numerator: 0.0,
                argmax: pts.first().copied().unwrap_or(0.0),
            };
            for (&x, (num, val)) in pts.iter().zip(vals) {
                row.numerator = row.numerator.max(num);
                if val > row.value {
                    row.value = val;
                    row.argmax = x;
                }
            }
            Ok(row)
        })
        .collect()
}

/// Scaled sequence `n^(alpha/2) max_x A_n(x)`; bounded with slope in `[-0.3, 0.15]`.
pub fn check_lemma5(spec: &SweepSpec) -> Result<BoundedReport> {
    let w = spec.weight;
    let rows = sweep_rows(
        spec,
        |n| operator_grid(&spec.grid, &compute_nodes(n, w.xi)),
        |n, x| {
            let a = lemma5_quantity(n, &w, x)?;
            Ok((a, a * (n as f64).powf(w.alpha / 2.0)))
        },
    )?;
    Ok(BoundedReport::new("lemma5", spec, None, &[], rows, TrendRule::with_slope_range(-0.3, 0.15)))
}

/// `max_x lemma6_quantity / (n^((beta - alpha)/2) phi^beta(x))`.
pub fn check_lemma6(spec: &SweepSpec, beta: f64) -> Result<BoundedReport> {
    if !(beta > 0.0) {
        return Err(crate::error::domain("beta", beta, "(0, inf)"));
    }
    let w = spec.weight;
    let rows = sweep_rows(
        spec,
        |n| operator_grid(&spec.grid, &compute_nodes(n, w.xi)),
        |n, x| {
            let lhs = lemma6_quantity(n, &w, beta, x)?;
            let rhs = (n as f64).powf((beta - w.alpha) / 2.0) * phi(x)?.powf(beta);
            Ok((lhs, if lhs == 0.0 { 0.0 } else { lhs / rhs }))
        },
    )?;
    Ok(BoundedReport::new("lemma6", spec, None, &[("beta", beta)], rows, TrendRule::default()))
}

/// `w |f - P|` on `[x1, x4]` against `(delta_n / (sqrt(n) phi^lambda))^2 ||w phi^(2 lambda) f''||`.
pub fn check_lemma7(f: &TestFunction<f64>, spec: &SweepSpec) -> Result<BoundedReport> {
    if !f.has_second_derivative() {
        return Err(Error::MissingSecondDerivative(f.name.clone()));
    }
    spec.validate()?;
    let (w, lambda) = (spec.weight, spec.lambda);
    let mut rows = Vec::with_capacity(spec.n_values.len());
    for &n in &spec.n_values {
        let nodes = compute_nodes(n, w.xi);
        let chord = linear_joiner(f, &nodes)?;
        let grid = operator_grid(&spec.grid, &nodes);
        let norm = weighted_second_derivative_norm(f, &w, lambda, &grid)?;
        let m = 1024;
        let mut pts: Vec<f64> = (0..=m)
            .map(|j| nodes.x1 + (nodes.x4 - nodes.x1) * j as f64 / m as f64)
            .collect();
        pts.extend(grid.iter().copied().filter(|x| *x > nodes.x1 && *x < nodes.x4));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let defect = |x: f64| -> Result<f64> {
            if x == w.xi {
                return Ok(0.0);
            }
            let (fx, px) = (f.eval(x), chord.eval(x));
            let gap = (fx - px).abs();
            // a chord reproduces lines only up to rounding
            if gap <= 64.0 * f64::EPSILON * fx.abs().max(px.abs()).max(1.0) {
                return Ok(0.0);
            }
            Ok(w.at(x) * gap)
        };
        let (numerator, _) = sup_with_arg(&pts, defect)?;
        let (value, argmax) = sup_with_arg(&pts, |x| {
            let d = defect(x)?;
            if d == 0.0 {
                return Ok(0.0);
            }
            let scale = delta_n(n, x)? / ((n as f64).sqrt() * phi_pow(x, lambda));
            Ok(d / (scale * scale * norm))
        })?;
        rows.push(RatioRow {
            n,
            value,
            numerator,
            argmax,
        });
    }
    Ok(BoundedReport::new("lemma7", spec, Some(&f.name), &[], rows, TrendRule::default()))
}

/// Stability: `||w Bbar_n f|| / ||w f||`.
pub fn check_stability(f: &TestFunction<f64>, spec: &SweepSpec) -> Result<BoundedReport> {
    spec.validate()?;
    let w = spec.weight;
    let mut rows = Vec::with_capacity(spec.n_values.len());
    for &n in &spec.n_values {
        let coeffs = build_surrogate(f, n, &w)?;
        let pts = operator_grid(&spec.grid, &coeffs.nodes);
        let norm = weighted_sup_over(&f.name, &pts, |x| f.weighted(&w, x))?;
        let (numerator, argmax) = sup_with_arg(&pts, |x| Ok((w.at(x) * coeffs.apply(x)?).abs()))?;
        let value = if numerator == 0.0 { 0.0 } else { numerator / norm };
        rows.push(RatioRow {
            n,
            value,
            numerator,
            argmax,
        });
    }
    Ok(BoundedReport::new("lemma2", spec, Some(&f.name), &[], rows, TrendRule::default()))
}

fn interior_points(spec: &SweepSpec, n: usize) -> Vec<f64> {
    let lo = 1.0 / n as f64;
    let mut pts: Vec<f64> = spec
        .grid
        .points(spec.weight.xi, &[lo, 1.0 - lo])
        .into_iter()
        .filter(|x| *x >= lo && *x <= 1.0 - lo)
        .collect();
    pts.dedup();
    pts
}

/// `sum_k p_{n,k}(x) |k - n x|^gamma / (n^(gamma/2) phi^gamma(x))` on `[1/n, 1 - 1/n]`.
pub fn check_lemma4(spec: &SweepSpec, gamma: f64) -> Result<BoundedReport> {
    if !(gamma >= 0.0) {
        return Err(crate::error::domain("gamma", gamma, "[0, inf)"));
    }
    let rows = sweep_rows(
        spec,
        |n| interior_points(spec, n),
        |n, x| {
            let s = central_moment_sum(&MomentQuery::central(n, x, gamma))?;
            let rhs = (n as f64).powf(gamma / 2.0) * phi(x)?.powf(gamma);
            Ok((s, s / rhs))
        },
    )?;
    Ok(BoundedReport::new("lemma4", spec, None, &[("gamma", gamma)], rows, TrendRule::default()))
}

/// `sum_{k=1}^{n-1} (k/n)^(-u) (1 - k/n)^(-v) p_{n,k}(x) / (x^(-u) (1 - x)^(-v))`.
pub fn check_lemma1(spec: &SweepSpec, u: f64, v: f64) -> Result<BoundedReport> {
    let rows = sweep_rows(
        spec,
        |n| interior_points(spec, n),
        |n, x| {
            let s = inverse_moment_sum(&MomentQuery::inverse(n, x, u, v))?;
            Ok((s, s * x.powf(u) * (1.0 - x).powf(v)))
        },
    )?;
    Ok(BoundedReport::new("lemma1", spec, None, &[("u", u), ("v", v)], rows, TrendRule::default()))
}
