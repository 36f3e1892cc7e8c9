//! The Bernstein operator, the modified operator `Bbar_n f = B_n(F_n f)`
//! and its second derivative.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{basis_window, check_unit, BasisWindow, WINDOW_CUTOFF};
use crate::bridge::{compute_nodes, linear_joiner, psi, BridgeNodes};
use crate::error::{domain, Error, Result};
use crate::scalar::Real;
use crate::weight::{phi_unchecked, weighted_sup_over, GridSpec, SingularWeight, TestFunction};

/// `F_n(f, k/n)` for `k = 0..=n`, the coefficients `Bbar_n` is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateCoefficients<T> {
    pub n: usize,
    pub values: Vec<T>,
    pub nodes: BridgeNodes<T>,
    second_differences: Vec<T>,
}

fn window<T: Real>(degree: usize, x: T) -> BasisWindow<T> {
    if degree == 0 {
        return BasisWindow {
            start: 0,
            weights: vec![T::one()],
        };
    }
    basis_window(degree, x, T::lit(WINDOW_CUTOFF)).expect("x checked by caller")
}

/// `sum_k values[k] p_{n,k}(x)` with `n = values.len() - 1`.
pub fn bernstein_apply<T: Real>(values: &[T], x: T) -> Result<T> {
    if values.is_empty() {
        return Err(domain("coefficient count", 0.0, "at least 1"));
    }
    check_unit(x)?;
    Ok(window(values.len() - 1, x).dot(values))
}

impl<T: Real> SurrogateCoefficients<T> {
    /// Wraps precomputed values; `values.len()` must be `nodes.n + 1`.
    pub fn from_values(values: Vec<T>, nodes: BridgeNodes<T>) -> Result<Self> {
        if values.len() != nodes.n + 1 {
            return Err(domain("coefficient count", values.len() as f64, "n + 1"));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: format!("coefficient {k}"),
                x: v.as_f64(),
            });
        }
        let second_differences = values
            .windows(3)
            .map(|w| w[2] - (w[1] + w[1]) + w[0])
            .collect();
        Ok(Self {
            n: nodes.n,
            values,
            nodes,
            second_differences,
        })
    }

    /// `Bbar_n(f, x)`.
    pub fn apply(&self, x: T) -> Result<T> {
        bernstein_apply(&self.values, x)
    }

    /// `Delta^2_{1/n} F_n(k/n)` for `k = 0..=n-2`.
    pub fn second_differences(&self) -> &[T] {
        &self.second_differences
    }

    pub fn second_derivative(&self, x: T) -> Result<T> {
        bbar_second_derivative(self, x)
    }
}

/// Samples the surrogate at `k/n`, branch by branch.
pub fn build_surrogate<T: Real>(
    f: &TestFunction<T>,
    n: usize,
    w: &SingularWeight<T>,
) -> Result<SurrogateCoefficients<T>> {
    let nodes = compute_nodes(n, w.xi);
    let chord = linear_joiner(f, &nodes)?;
    let [i1, i2, i3, i4] = nodes.index;
    let nf = T::from_usize_lossy(n);
    let ramp = |k: i64, a: i64, b: i64| psi(T::from_i64(k - a).unwrap() / T::from_i64(b - a).unwrap());
    let values = (0..=n)
        .map(|k| {
            let x = T::from_usize_lossy(k) / nf;
            let ki = k as i64;
            if ki <= i1 || ki >= i4 {
                f.eval(x)
            } else if ki < i2 {
                let s = ramp(ki, i1, i2);
                f.eval(x) * (T::one() - s) + s * chord.eval(x)
            } else if ki <= i3 {
                chord.eval(x)
            } else {
                let s = ramp(ki, i3, i4);
                chord.eval(x) * (T::one() - s) + s * f.eval(x)
            }
        })
        .collect::<Vec<_>>();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            name: f.name.clone(),
            x: k as f64 / n as f64,
        });
    }
    SurrogateCoefficients::from_values(values, nodes)
}

pub fn bbar_apply<T: Real>(f: &TestFunction<T>, n: usize, w: &SingularWeight<T>, x: T) -> Result<T> {
    check_unit(x)?;
    build_surrogate(f, n, w)?.apply(x)
}

/// `n (n-1) sum_{k=0}^{n-2} Delta^2 F_n(k/n) p_{n-2,k}(x)`.
pub fn bbar_second_derivative<T: Real>(coeffs: &SurrogateCoefficients<T>, x: T) -> Result<T> {
    if coeffs.n < 2 {
        return Err(domain("n", coeffs.n as f64, "n >= 2"));
    }
    check_unit(x)?;
    let n = T::from_usize_lossy(coeffs.n);
    let sum = window(coeffs.n - 2, x).dot(&coeffs.second_differences);
    Ok(n * (n - T::one()) * sum)
}

/// Majorant a second-derivative bound is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `n^(2-lambda) ||w f||`, for `f` in `C_w`.
    Weighted,
    /// `||w phi^(2 lambda) f''||`, for `f` in `W^2`.
    Sobolev,
}

/// Sup-norm grid for order-`n` quantities: the base grid plus the bridge nodes.
pub fn operator_grid<T: Real>(g: &GridSpec, nodes: &BridgeNodes<T>) -> Vec<T> {
    g.points(nodes.xi, &nodes.as_array())
}

/// `max |w phi^(2 lambda) Bbar_n'' f| / majorant` over the grid.
pub fn weighted_operator_norm_ratio<T: Real>(
    f: &TestFunction<T>,
    n: usize,
    w: &SingularWeight<T>,
    lambda: T,
    g: &GridSpec,
    branch: Branch,
) -> Result<T> {
    let coeffs = build_surrogate(f, n, w)?;
    let pts = operator_grid(g, &coeffs.nodes);
    let numerator = weighted_second_derivative_sup(&coeffs, w, lambda, &pts)?;
    let majorant = match branch {
        Branch::Weighted => {
            let norm = weighted_sup_over(&f.name, &pts, |x| f.weighted(w, x))?;
            T::from_usize_lossy(n).powf(T::lit(2.0) - lambda) * norm
        }
        Branch::Sobolev => weighted_second_derivative_norm(f, w, lambda, &pts)?,
    };
    Ok(safe_ratio(numerator, majorant, noise_floor(&coeffs)))
}

/// Rounding level of `Bbar_n''` given the coefficient magnitudes.
pub fn noise_floor<T: Real>(coeffs: &SurrogateCoefficients<T>) -> T {
    let scale = coeffs
        .values
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let n = T::from_usize_lossy(coeffs.n);
    n * n * scale * T::epsilon() * T::lit(64.0)
}

/// `a / b`, reading `0 / 0` (up to `floor`) as 0.
pub(crate) fn safe_ratio<T: Real>(a: T, b: T, floor: T) -> T {
    if a == T::zero() {
        T::zero()
    } else if b == T::zero() {
        if a <= floor {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        a / b
    }
}

/// `max |w phi^(2 lambda) Bbar_n''|` over `pts`.
pub fn weighted_second_derivative_sup<T: Real>(
    coeffs: &SurrogateCoefficients<T>,
    w: &SingularWeight<T>,
    lambda: T,
    pts: &[T],
) -> Result<T> {
    let vals: Vec<T> = pts
        .par_iter()
        .map(|&x| -> Result<T> {
            let d2 = bbar_second_derivative(coeffs, x)?;
            Ok((w.at(x) * phi_pow(x, lambda + lambda) * d2).abs())
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

/// `max |w phi^(2 lambda) f''|` over `pts`.
pub fn weighted_second_derivative_norm<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    lambda: T,
    pts: &[T],
) -> Result<T> {
    if !f.has_second_derivative() {
        return Err(Error::MissingSecondDerivative(f.name.clone()));
    }
    weighted_sup_over(&f.name, pts, |x| {
        if x == w.xi {
            T::zero()
        } else {
            w.at(x) * phi_pow(x, lambda + lambda) * f.second_derivative(x).unwrap()
        }
    })
}

/// `phi(x)^e` with `0^0 = 1`.
#[inline]
pub(crate) fn phi_pow<T: Real>(x: T, e: T) -> T {
    if e == T::zero() {
        T::one()
    } else {
        phi_unchecked(x).powf(e)
    }
}

type CacheKey = (String, usize, u64, u64);

/// Shared store of surrogate coefficients keyed by `(f, n, xi, alpha)`.
pub struct SurrogateCache<T> {
    inner: RwLock<HashMap<CacheKey, Arc<SurrogateCoefficients<T>>>>,
}

impl<T: Real> Default for SurrogateCache<T> {
    fn default() -> Self {
        Self {
            inner: RwLock::new(HashMap::new()),
        }
    }
}

impl<T: Real> SurrogateCache<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        f: &TestFunction<T>,
        n: usize,
        w: &SingularWeight<T>,
    ) -> Result<Arc<SurrogateCoefficients<T>>> {
        let key = (
            f.name.clone(),
            n,
            w.xi.as_f64().to_bits(),
            w.alpha.as_f64().to_bits(),
        );
        if let Some(c) = self.inner.read().expect("cache lock").get(&key) {
            return Ok(c.clone());
        }
        let built = Arc::new(build_surrogate(f, n, w)?);
        let mut map = self.inner.write().expect("cache lock");
        Ok(map.entry(key).or_insert(built).clone())
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
