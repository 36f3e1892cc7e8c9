use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{
    bbar_second_derivative, build_surrogate, noise_floor, operator_grid, phi_pow,
    weighted_second_derivative_norm, Branch, SurrogateCoefficients,
};
use crate::weight::{phi, weighted_sup_over, TestFunction};

use super::{BoundedReport, RatioRow, RegimeRow, SweepSpec, TrendRule};

struct Pointwise {
    pts: Vec<f64>,
    /// `|w phi^(2 lambda) Bbar_n'' f|` at each point, with rounding-level values set to 0.
    values: Vec<f64>,
    numerator: f64,
    norm: f64,
}

fn pointwise(f: &TestFunction<f64>, spec: &SweepSpec, n: usize, lambda: f64) -> Result<Pointwise> {
    let w = spec.weight;
    let coeffs: SurrogateCoefficients<f64> = build_surrogate(f, n, &w)?;
    let pts = operator_grid(&spec.grid, &coeffs.nodes);
    let floor = noise_floor(&coeffs);
    let values: Vec<f64> = pts
        .par_iter()
        .map(|&x| -> Result<f64> {
            let d2 = bbar_second_derivative(&coeffs, x)?;
            let d2 = if d2.abs() <= floor { 0.0 } else { d2 };
            Ok((w.at(x) * phi_pow(x, 2.0 * lambda) * d2).abs())
        })
        .collect::<Result<_>>()?;
    let numerator = values.iter().copied().fold(0.0, f64::max);
    let norm = weighted_sup_over(&f.name, &pts, |x| f.weighted(&w, x))?;
    Ok(Pointwise {
        pts,
        values,
        numerator,
        norm,
    })
}

fn argmax(pts: &[f64], ratios: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut best = (0.0, pts.first().copied().unwrap_or(0.0));
    for (&x, r) in pts.iter().zip(ratios) {
        if r > best.0 {
            best = (r, x);
        }
    }
    best
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `||w Bbar_n'' f|| / (n^2 ||w f||)`.
pub fn check_theorem1(f: &TestFunction<f64>, spec: &SweepSpec) -> Result<BoundedReport> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &n in &spec.n_values {
        let p = pointwise(f, spec, n, 0.0)?;
        let scale = (n as f64).powi(2) * p.norm;
        let (value, at) = argmax(&p.pts, p.values.iter().map(|v| ratio(*v, scale)));
        rows.push(RatioRow {
            n,
            value,
            numerator: p.numerator,
            argmax: at,
        });
    }
    let mut spec0 = spec.clone();
    spec0.lambda = 0.0;
    Ok(BoundedReport::new("theorem1", &spec0, Some(&f.name), &[], rows, TrendRule::default()))
}

/// Weighted branch: pointwise `|w phi^(2 lambda) Bbar_n''| / (n max{n^(1-lambda), phi^(2(lambda-1))} ||w f||)`,
/// also split into the regimes `phi <= n^(-1/2)` and `phi > n^(-1/2)`.
/// Sobolev branch: `||w phi^(2 lambda) Bbar_n''|| / ||w phi^(2 lambda) f''||`.
pub fn check_theorem2(f: &TestFunction<f64>, spec: &SweepSpec, branch: Branch) -> Result<BoundedReport> {
    spec.validate()?;
    if branch == Branch::Sobolev && !f.has_second_derivative() {
        return Err(Error::MissingSecondDerivative(f.name.clone()));
    }
    let lambda = spec.lambda;
    let mut rows = Vec::new();
    let mut regimes = Vec::new();
    for &n in &spec.n_values {
        let p = pointwise(f, spec, n, lambda)?;
        let nf = n as f64;
        match branch {
            Branch::Weighted => {
                let cut = nf.sqrt().recip();
                let mut regime = RegimeRow {
                    n,
                    near_endpoint: 0.0,
                    interior: 0.0,
                };
                let ratios: Vec<f64> = p
                    .pts
                    .iter()
                    .zip(&p.values)
                    .map(|(&x, &v)| {
                        let ph = phi(x).unwrap_or(0.0);
                        let reach = if ph == 0.0 {
                            if lambda == 1.0 { 1.0 } else { f64::INFINITY }
                        } else {
                            ph.powf(2.0 * (lambda - 1.0))
                        };
                        let r = ratio(v, nf * nf.powf(1.0 - lambda).max(reach) * p.norm);
                        if ph <= cut {
                            regime.near_endpoint = regime.near_endpoint.max(r);
                        } else {
                            regime.interior = regime.interior.max(r);
                        }
                        r
                    })
                    .collect();
                let (value, at) = argmax(&p.pts, ratios.into_iter());
                rows.push(RatioRow {
                    n,
                    value,
                    numerator: p.numerator,
                    argmax: at,
                });
                regimes.push(regime);
            }
            Branch::Sobolev => {
                let norm = weighted_second_derivative_norm(f, &spec.weight, lambda, &p.pts)?;
                let (_, at) = argmax(&p.pts, p.values.iter().copied());
                rows.push(RatioRow {
                    n,
                    value: ratio(p.numerator, norm),
                    numerator: p.numerator,
                    argmax: at,
                });
            }
        }
    }
    let check = match branch {
        Branch::Weighted => "theorem2_weighted",
        Branch::Sobolev => "theorem2_sobolev",
    };
    let mut report = BoundedReport::new(check, spec, Some(&f.name), &[], rows, TrendRule::default());
    report.regimes = regimes;
    Ok(report)
}
