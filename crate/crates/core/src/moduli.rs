//! Weighted second-order moduli of smoothness.
//!
//! `omega2` combines the symmetric difference with step `h phi^lambda(x)` on
//! `[16h^2, 1 - 16h^2]` and one-sided differences with step `h` on the two
//! boundary bands. `omega2_mainpart` keeps only the symmetric difference,
//! wherever its stencil stays inside `(0, 1)`. The supremum over `0 < h <= t`
//! is taken over `h_steps` geometric steps `t 2^(-j/8)`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::operator::phi_pow;
use crate::scalar::{Compensated, Real};
use crate::weight::{weighted_sup_over, FunctionKind, GridSpec, SingularWeight, TestFunction};

/// Geometric refinement of the `h` grid, steps per halving.
const STEPS_PER_OCTAVE: f64 = 8.0;

pub const DEFAULT_H_STEPS: usize = 32;

/// Largest `t` for which the boundary bands do not overlap.
pub const MAX_T: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct ModulusQuery<T> {
    pub f: TestFunction<T>,
    pub w: SingularWeight<T>,
    pub lambda: T,
    pub t: T,
    pub h_steps: usize,
    pub grid: GridSpec,
}

impl<T: Real> ModulusQuery<T> {
    pub fn new(f: TestFunction<T>, w: SingularWeight<T>, lambda: T, t: T) -> Result<Self> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(domain("lambda", lambda.as_f64(), "[0, 1]"));
        }
        if !(t > T::zero() && t <= T::lit(MAX_T)) {
            return Err(domain("t", t.as_f64(), "(0, 0.25]"));
        }
        Ok(Self {
            f,
            w,
            lambda,
            t,
            h_steps: DEFAULT_H_STEPS,
            grid: GridSpec::default(),
        })
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_h_steps(mut self, h_steps: usize) -> Self {
        self.h_steps = h_steps.max(1);
        self
    }

    pub fn at_t(&self, t: T) -> Result<Self> {
        let mut q = Self::new(self.f.clone(), self.w, self.lambda, t)?;
        q.h_steps = self.h_steps;
        q.grid = self.grid;
        Ok(q)
    }

    /// The step sizes the supremum runs over, largest first.
    pub fn steps(&self) -> Vec<T> {
        (0..self.h_steps)
            .map(|j| self.t * T::lit(2f64.powf(-(j as f64) / STEPS_PER_OCTAVE)))
            .collect()
    }
}

fn stencil_ok<T: Real>(w: &SingularWeight<T>, pts: &[T]) -> bool {
    pts.iter()
        .all(|&p| p >= T::zero() && p <= T::one() && p != w.xi)
}

/// `w(x) [f(x + tau) - 2 f(x) + f(x - tau)]` with `tau = h phi^lambda(x)`;
/// `None` when a stencil point leaves `[0, 1]` or lands on `xi`.
pub fn second_difference_symmetric<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    lambda: T,
    h: T,
    x: T,
) -> Option<T> {
    let tau = h * phi_pow(x, lambda);
    let (a, b) = (x - tau, x + tau);
    if !stencil_ok(w, &[a, x, b]) {
        return None;
    }
    Some(w.at(x) * (f.eval(b) - (f.eval(x) + f.eval(x)) + f.eval(a)))
}

/// `w(x) [f(x + 2h) - 2 f(x + h) + f(x)]`.
pub fn second_difference_forward<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    h: T,
    x: T,
) -> Option<T> {
    let (a, b) = (x + h, x + h + h);
    if !stencil_ok(w, &[x, a, b]) {
        return None;
    }
    let fa = f.eval(a);
    Some(w.at(x) * (f.eval(b) - (fa + fa) + f.eval(x)))
}

/// `w(x) [f(x - 2h) - 2 f(x - h) + f(x)]`.
pub fn second_difference_backward<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    h: T,
    x: T,
) -> Option<T> {
    let (a, b) = (x - h, x - h - h);
    if !stencil_ok(w, &[x, a, b]) {
        return None;
    }
    let fa = f.eval(a);
    Some(w.at(x) * (f.eval(b) - (fa + fa) + f.eval(x)))
}

fn sup_abs<T: Real>(name: &str, vals: impl Iterator<Item = (T, Option<T>)>) -> Result<T> {
    let mut best = T::zero();
    for (x, v) in vals {
        if let Some(v) = v {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    name: name.to_string(),
                    x: x.as_f64(),
                });
            }
            best = best.max(v.abs());
        }
    }
    Ok(best)
}

/// The three band norms of the full modulus at one step `h`:
/// `(interior, forward, backward)`.
pub fn omega2_bands<T: Real>(q: &ModulusQuery<T>, pts: &[T], h: T) -> Result<(T, T, T)> {
    let band = T::lit(16.0) * h * h;
    let hi = T::one() - band;
    let f = &q.f;
    let interior = sup_abs(
        &f.name,
        pts.iter()
            .filter(|&&x| x >= band && x <= hi)
            .map(|&x| (x, second_difference_symmetric(f, &q.w, q.lambda, h, x))),
    )?;
    let forward = sup_abs(
        &f.name,
        pts.iter()
            .filter(|&&x| x <= band)
            .map(|&x| (x, second_difference_forward(f, &q.w, h, x))),
    )?;
    let backward = sup_abs(
        &f.name,
        pts.iter()
            .filter(|&&x| x >= hi)
            .map(|&x| (x, second_difference_backward(f, &q.w, h, x))),
    )?;
    Ok((interior, forward, backward))
}

fn sup_over_steps<T: Real>(steps: &[T], at: impl Fn(T) -> Result<T> + Sync) -> Result<T> {
    let vals: Vec<T> = steps.par_iter().map(|&h| at(h)).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

/// `omega^2_{phi^lambda}(f, t)_w` on the query grid.
pub fn omega2<T: Real>(q: &ModulusQuery<T>) -> Result<T> {
    let pts = q.grid.points(q.w.xi, &[]);
    sup_over_steps(&q.steps(), |h| {
        let (a, b, c) = omega2_bands(q, &pts, h)?;
        Ok(a + b + c)
    })
}

/// Main-part modulus: symmetric differences only, stencil inside `(0, 1)`.
pub fn omega2_mainpart<T: Real>(q: &ModulusQuery<T>) -> Result<T> {
    let pts = q.grid.points(q.w.xi, &[]);
    sup_over_steps(&q.steps(), |h| {
        sup_abs(
            &q.f.name,
            pts.iter().map(|&x| {
                let tau = h * phi_pow(x, q.lambda);
                let inside = x - tau > T::zero() && x + tau < T::one();
                let v = if inside {
                    second_difference_symmetric(&q.f, &q.w, q.lambda, h, x)
                } else {
                    None
                };
                (x, v)
            }),
        )
    })
}

/// `min_g ||w (f - g)|| + t^2 ||w phi^(2 lambda) g''||` over `candidates`,
/// an upper bound for the K-functional.
pub fn kfunctional_upper<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    lambda: T,
    t: T,
    candidates: &[TestFunction<T>],
    grid: &GridSpec,
) -> Result<T> {
    if candidates.is_empty() {
        return Err(domain("candidate count", 0.0, "at least 1"));
    }
    // the smoothed candidates bend on scales down to 2^-20, far below the grid spacing
    let cluster: Vec<T> = (0..=66)
        .flat_map(|j| {
            let d = T::lit(2f64.powf(-(j as f64) / 3.0));
            [w.xi - d, w.xi + d]
        })
        .collect();
    let pts = grid.points(w.xi, &cluster);
    let two_lambda = lambda + lambda;
    let mut best = T::infinity();
    for g in candidates {
        if !g.has_second_derivative() {
            return Err(Error::MissingSecondDerivative(g.name.clone()));
        }
        let gap = weighted_sup_over(&g.name, &pts, |x| {
            if x == w.xi {
                T::zero()
            } else {
                w.at(x) * (f.eval(x) - g.eval(x))
            }
        })?;
        let curv = weighted_sup_over(&g.name, &pts, |x| {
            if x == w.xi {
                T::zero()
            } else {
                w.at(x) * phi_pow(x, two_lambda) * g.second_derivative(x).unwrap()
            }
        })?;
        best = best.min(gap + t * t * curv);
    }
    Ok(best)
}

/// Smooth candidates for the K-functional bound of `f`: the zero function,
/// `f` itself when it has a second derivative, and for singular members
/// with exponent `beta` the family `((x - xi)^2 + eps^2)^(beta/2)`.
pub fn smoothing_candidates<T: Real>(f: &TestFunction<T>, w: &SingularWeight<T>) -> Vec<TestFunction<T>> {
    let mut out = vec![crate::weight::zero_function()];
    if f.has_second_derivative() {
        out.push(f.clone());
    }
    if let (FunctionKind::Singular, Some(beta)) = (f.kind, f.singularity_exponent) {
        let xi = w.xi;
        for j in 0..=60 {
            let eps = T::lit(2f64.powf(-(j as f64) / 3.0));
            let half = beta / T::lit(2.0);
            let g = TestFunction::new(format!("smoothed_{}_{j}", f.name), FunctionKind::Smooth, move |x: T| {
                let s = x - xi;
                (s * s + eps * eps).powf(half)
            })
            .with_second_derivative(move |x: T| {
                let s = x - xi;
                let r = s * s + eps * eps;
                beta * r.powf(half - T::lit(2.0)) * ((beta - T::one()) * s * s + eps * eps)
            });
            out.push(g);
        }
    }
    out
}

/// Ratio of `int int phi^(-2 beta)(x + u1 + u2) du1 du2` over
/// `[-h phi^lambda(x) / 2, h phi^lambda(x) / 2]^2` to
/// `h^2 phi^(2 (lambda - beta))(x)`, by midpoint quadrature on `nodes^2`
/// points. `None` when the integration box leaves `(0, 1)`.
pub fn lemma3_ratio<T: Real>(x: T, h: T, lambda: T, beta: T, nodes: usize) -> Option<T> {
    let tau = h * phi_pow(x, lambda);
    if !(x - tau > T::zero() && x + tau < T::one()) {
        return None;
    }
    let cell = tau / T::from_usize_lossy(nodes);
    let half = tau / T::lit(2.0);
    let offsets: Vec<T> = (0..nodes)
        .map(|i| -half + cell * (T::from_usize_lossy(i) + T::lit(0.5)))
        .collect();
    let mut acc = Compensated::new();
    for &u1 in &offsets {
        for &u2 in &offsets {
            acc.add(phi_pow(x + u1 + u2, -(beta + beta)));
        }
    }
    let lhs = acc.value() * cell * cell;
    let rhs = h * h * phi_pow(x, (lambda - beta) * T::lit(2.0));
    Some(lhs / rhs)
}
