use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::CalibrationEntry;
use crate::error::{Error, Result};
use crate::moduli::{omega2, omega2_mainpart, ModulusQuery, DEFAULT_H_STEPS};
use crate::operator::{build_surrogate, operator_grid};
use crate::weight::{
    corpus, delta_n, phi, FunctionKind, GridSpec, Placement, SingularWeight, TestFunction,
};

use super::{assess_trend, fit_rate, representative_points, Fit, RatioRow, SweepSpec, Trend, TrendRule};

/// Allowed gap between a fitted and a target exponent.
pub const RATE_TOLERANCE: f64 = 0.15;
/// Allowed gap between the direct and the inverse exponent.
pub const CONSISTENCY_TOLERANCE: f64 = 0.2;
/// Largest accepted `Omega / omega` over the `t` sweep.
pub const SANDWICH_BOUND: f64 = 3.0;
/// `2^-2, ..., 2^-7`.
pub const DEFAULT_T_VALUES: [f64; 6] = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
/// Errors of linear functions above this count as failures.
const LINEAR_TOLERANCE: f64 = 1e-10;

pub const CALIBRATION_N_VALUES: [usize; 5] = [1024, 2048, 4096, 8192, 16384];
pub const CALIBRATION_GRID: GridSpec = GridSpec {
    count: 8193,
    exclusion_radius: 0.0,
    placement: Placement::Chebyshev,
};
/// `(xi, alpha, lambda)` panels covered by the calibration table.
pub const CALIBRATION_PANELS: [(f64, f64, f64); 6] = [
    (0.5, 0.5, 0.0),
    (0.5, 1.0, 0.0),
    (0.5, 0.5, 0.5),
    (0.5, 1.0, 0.5),
    (0.5, 0.5, 1.0),
    (0.5, 1.0, 1.0),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    /// `max_x w |f - Bbar_n f|`.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentativeFit {
    pub x: f64,
    pub slope: f64,
    pub residual: f64,
}

/// Direct-rate report.
///
/// `slope` is the exponent fitted between the max weighted error and the
/// rate factor `n^(-1/2) phi^(-lambda)(x) delta_n(x)` at the representative
/// point with the largest `phi`; the other points are listed in `representative`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub function: String,
    pub xi: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub pairs: Vec<ErrorRow>,
    /// `E(n)`: max over the grid of the weighted error over `factor^alpha0`.
    pub normalized: Vec<RatioRow>,
    pub normalized_trend: Option<Trend>,
    pub representative: Vec<RepresentativeFit>,
    pub slope: Option<f64>,
    pub residual: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

fn rate_factor(n: usize, lambda: f64, x: f64) -> f64 {
    let p = phi(x).unwrap_or(0.0);
    let dn = delta_n(n, x).unwrap_or(f64::NAN);
    (n as f64).sqrt().recip() * p.powf(-lambda) * dn
}

struct ErrorProfile {
    n: usize,
    pts: Vec<f64>,
    errors: Vec<f64>,
    max: f64,
}

fn error_profile(f: &TestFunction<f64>, w: &SingularWeight<f64>, n: usize, grid: &GridSpec) -> Result<ErrorProfile> {
    let coeffs = build_surrogate(f, n, w)?;
    let pts = operator_grid(grid, &coeffs.nodes);
    let errors: Vec<f64> = pts
        .par_iter()
        .map(|&x| -> Result<f64> {
            if x == w.xi {
                return Ok(0.0);
            }
            let e = w.at(x) * (f.eval(x) - coeffs.apply(x)?).abs();
            if !e.is_finite() {
                return Err(Error::NonFinite {
                    name: f.name.clone(),
                    x,
                });
            }
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let max = errors.iter().copied().fold(0.0, f64::max);
    Ok(ErrorProfile { n, pts, errors, max })
}

fn representative_fits(profiles: &[ErrorProfile], xi: f64, lambda: f64) -> Result<Vec<RepresentativeFit>> {
    representative_points(xi)
        .into_iter()
        .map(|x| {
            let pairs: Vec<(f64, f64)> = profiles.iter().map(|p| (rate_factor(p.n, lambda, x), p.max)).collect();
            let Fit { slope, residual, .. } = fit_rate(&pairs)?;
            Ok(RepresentativeFit { x, slope, residual })
        })
        .collect()
}

fn headline(fits: &[RepresentativeFit]) -> Option<&RepresentativeFit> {
    let mut best: Option<&RepresentativeFit> = None;
    for r in fits {
        let better = match best {
            None => true,
            Some(b) => phi(r.x).unwrap_or(0.0) > phi(b.x).unwrap_or(0.0) + 1e-12,
        };
        if better {
            best = Some(r);
        }
    }
    best
}

/// Fitted direct exponent of `f` over `spec`, without a target.
pub fn direct_exponent(f: &TestFunction<f64>, spec: &SweepSpec) -> Result<(f64, Vec<RepresentativeFit>)> {
    spec.validate()?;
    let profiles = spec
        .n_values
        .iter()
        .map(|&n| error_profile(f, &spec.weight, n, &spec.grid))
        .collect::<Result<Vec<_>>>()?;
    let fits = representative_fits(&profiles, spec.weight.xi, spec.lambda)?;
    let slope = headline(&fits).map(|r| r.slope).ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    Ok((slope, fits))
}

/// Direct estimate: `E(n)` bounded over the sweep and fitted exponent within
/// [`RATE_TOLERANCE`] of `f.expected_alpha0`. Linear `f` need no target; they
/// pass when every error is at rounding level.
pub fn check_direct(f: &TestFunction<f64>, spec: &SweepSpec) -> Result<RateReport> {
    spec.validate()?;
    let linear = f.kind == FunctionKind::Linear;
    let target = f.expected_alpha0;
    if target.is_none() && !linear {
        return Err(Error::MissingTarget(f.name.clone()));
    }
    let profiles = spec
        .n_values
        .iter()
        .map(|&n| error_profile(f, &spec.weight, n, &spec.grid))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<ErrorRow> = profiles.iter().map(|p| ErrorRow { n: p.n, error: p.max }).collect();
    let mut report = RateReport {
        function: f.name.clone(),
        xi: spec.weight.xi,
        alpha: spec.weight.alpha,
        lambda: spec.lambda,
        pairs,
        normalized: Vec::new(),
        normalized_trend: None,
        representative: Vec::new(),
        slope: None,
        residual: None,
        target,
        tolerance: RATE_TOLERANCE,
        pass: false,
    };
    let Some(alpha0) = target else {
        report.pass = report.pairs.iter().all(|r| r.error <= LINEAR_TOLERANCE);
        return Ok(report);
    };
    report.normalized = profiles
        .iter()
        .map(|p| {
            let mut row = RatioRow {
                n: p.n,
                value: 0.0,
                numerator: p.max,
                argmax: p.pts[0],
            };
            for (&x, &e) in p.pts.iter().zip(&p.errors) {
                if e == 0.0 {
                    continue;
                }
                let r = e / rate_factor(p.n, spec.lambda, x).powf(alpha0);
                if r.is_finite() && r > row.value {
                    row.value = r;
                    row.argmax = x;
                }
            }
            row
        })
        .collect();
    let trend = assess_trend(
        &report.normalized.iter().map(|r| (r.n as f64, r.value)).collect::<Vec<_>>(),
        TrendRule::default(),
    );
    let fits = representative_fits(&profiles, spec.weight.xi, spec.lambda)?;
    if let Some(h) = headline(&fits) {
        report.slope = Some(h.slope);
        report.residual = Some(h.residual);
    }
    report.representative = fits;
    report.pass = trend.bounded
        && report
            .slope
            .is_some_and(|s| (s - alpha0).abs() <= RATE_TOLERANCE);
    report.normalized_trend = Some(trend);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusRow {
    pub t: f64,
    pub omega: f64,
    pub omega_main: f64,
    /// `omega_main / omega`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InverseReport {
    pub function: String,
    pub xi: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub rows: Vec<ModulusRow>,
    pub omega_fit: Option<Fit>,
    pub main_fit: Option<Fit>,
    pub target: Option<f64>,
    pub tolerance: f64,
    /// Largest `Omega / omega` over the sweep.
    pub sandwich: f64,
    pub sandwich_bound: f64,
    pub pass: bool,
}

fn positive_fit(pairs: &[(f64, f64)]) -> Option<Fit> {
    if pairs.iter().all(|p| p.1 > 0.0) {
        fit_rate(pairs).ok()
    } else {
        None
    }
}

/// Inverse estimate: slope of `omega^2(f, t)` at least `target - RATE_TOLERANCE`,
/// and `Omega <= SANDWICH_BOUND * omega` at every `t`.
pub fn check_inverse(
    f: &TestFunction<f64>,
    w: &SingularWeight<f64>,
    lambda: f64,
    target: Option<f64>,
    t_values: &[f64],
    grid: &GridSpec,
) -> Result<InverseReport> {
    if t_values.len() < 3 {
        return Err(Error::InvalidSweep(format!("need at least 3 values of t, got {}", t_values.len())));
    }
    let base = ModulusQuery::new(f.clone(), *w, lambda, t_values[0])?
        .with_grid(*grid)
        .with_h_steps(DEFAULT_H_STEPS);
    let rows = t_values
        .iter()
        .map(|&t| {
            let q = base.at_t(t)?;
            let omega = omega2(&q)?;
            let omega_main = omega2_mainpart(&q)?;
            let ratio = if omega_main == 0.0 {
                0.0
            } else if omega == 0.0 {
                f64::INFINITY
            } else {
                omega_main / omega
            };
            Ok(ModulusRow {
                t,
                omega,
                omega_main,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let omega_fit = positive_fit(&rows.iter().map(|r| (r.t, r.omega)).collect::<Vec<_>>());
    let main_fit = positive_fit(&rows.iter().map(|r| (r.t, r.omega_main)).collect::<Vec<_>>());
    let sandwich = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let vanishes = rows.iter().all(|r| r.omega == 0.0 && r.omega_main == 0.0);
    let rate_ok = match (target, omega_fit) {
        _ if vanishes => true,
        (None, _) => true,
        (Some(a0), Some(fit)) => fit.slope >= a0 - RATE_TOLERANCE,
        (Some(_), None) => false,
    };
    Ok(InverseReport {
        function: f.name.clone(),
        xi: w.xi,
        alpha: w.alpha,
        lambda,
        rows,
        omega_fit,
        main_fit,
        target,
        tolerance: RATE_TOLERANCE,
        sandwich,
        sandwich_bound: SANDWICH_BOUND,
        pass: rate_ok && sandwich <= SANDWICH_BOUND,
    })
}

/// The exponent the direct and inverse estimates should share, for members
/// where it lies in the range `(0, 2]` the equivalence covers: singular
/// members with `alpha + beta <= 2` and a calibrated target.
pub fn theorem3_target(f: &TestFunction<f64>, w: &SingularWeight<f64>) -> Option<f64> {
    match (f.kind, f.singularity_exponent, f.expected_alpha0) {
        (FunctionKind::Singular, Some(beta), Some(a0)) if w.alpha + beta <= 2.0 + 1e-12 => Some(a0),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub applicable: bool,
    pub direct_slope: Option<f64>,
    /// Slope of the main-part modulus `Omega`.
    pub inverse_slope: Option<f64>,
    /// Slope of the full modulus `omega`, for reference.
    pub omega_slope: Option<f64>,
    /// `|direct_slope - inverse_slope|`.
    pub delta: Option<f64>,
    pub omega_delta: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the direct exponent with the main-part modulus slope.
///
/// The full modulus includes one-sided boundary bands of width `16 h^2`; for
/// `t >= 1/8` their stencils reach `xi` and dominate, so its slope over the
/// default `t` range reflects the bands rather than the singularity. Its delta
/// is reported alongside.
pub fn consistency(direct: Option<&RateReport>, inverse: &InverseReport, applicable: bool) -> Consistency {
    let direct_slope = direct.and_then(|d| d.slope);
    let inverse_slope = inverse.main_fit.map(|f| f.slope);
    let omega_slope = inverse.omega_fit.map(|f| f.slope);
    let gap = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| (a - b).abs());
    let delta = gap(direct_slope, inverse_slope);
    Consistency {
        applicable,
        direct_slope,
        inverse_slope,
        omega_slope,
        delta,
        omega_delta: gap(direct_slope, omega_slope),
        tolerance: CONSISTENCY_TOLERANCE,
        pass: !applicable || delta.is_some_and(|d| d <= CONSISTENCY_TOLERANCE),
    }
}

/// Direct, inverse and consistency results for one function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionSweep {
    pub function: String,
    pub kind: FunctionKind,
    pub xi: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Whether the function falls under the direct/inverse equivalence.
    pub equivalence_applies: bool,
    pub direct: Option<RateReport>,
    pub inverse: InverseReport,
    pub consistency: Consistency,
    pub pass: bool,
}

/// Runs the direct and inverse checks for each function, in order.
///
/// Functions with neither a calibrated target nor linear kind get no direct
/// report. The inverse rate target is only applied where the equivalence
/// covers the member.
pub fn run_sweep(spec: &SweepSpec, functions: &[TestFunction<f64>], t_values: &[f64]) -> Result<Vec<FunctionSweep>> {
    spec.validate()?;
    functions
        .iter()
        .map(|f| {
            let direct = if f.expected_alpha0.is_some() || f.kind == FunctionKind::Linear {
                Some(check_direct(f, spec)?)
            } else {
                None
            };
            let target = theorem3_target(f, &spec.weight);
            let inverse = check_inverse(f, &spec.weight, spec.lambda, target, t_values, &spec.grid)?;
            let consistency = consistency(direct.as_ref(), &inverse, target.is_some());
            let pass = direct.as_ref().map_or(true, |d| d.pass) && inverse.pass && consistency.pass;
            Ok(FunctionSweep {
                function: f.name.clone(),
                kind: f.kind,
                xi: spec.weight.xi,
                alpha: spec.weight.alpha,
                lambda: spec.lambda,
                equivalence_applies: target.is_some(),
                direct,
                inverse,
                consistency,
                pass,
            })
        })
        .collect()
}

/// Regenerates the calibration table: the direct exponent of every singular
/// corpus member, fitted over [`CALIBRATION_N_VALUES`] on [`CALIBRATION_GRID`].
pub fn calibrate(panels: &[(f64, f64, f64)]) -> Result<Vec<CalibrationEntry>> {
    let mut out = Vec::new();
    for &(xi, alpha, lambda) in panels {
        let w = SingularWeight::new(xi, alpha)?;
        let spec = SweepSpec::new(w, lambda)
            .with_n_values(CALIBRATION_N_VALUES.to_vec())
            .with_grid(CALIBRATION_GRID);
        for f in corpus(&w, lambda).iter().filter(|f| f.kind == FunctionKind::Singular) {
            let (alpha0, _) = direct_exponent(f, &spec)?;
            out.push(CalibrationEntry {
                function: f.name.clone(),
                xi,
                alpha,
                lambda,
                alpha0,
            });
        }
    }
    Ok(out)
}
