//! The bridge across the singularity: the quintic smoothstep, the four
//! floor-quantized nodes around `xi`, the chord joining `f(x1)` and `f(x4)`,
//! and the surrogate `F_n` that blends `f` into that chord.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weight::TestFunction;

/// `10u^3 - 15u^4 + 6u^5` on `(0, 1)`, clamped to 0 and 1 outside.
#[inline]
pub fn psi<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else if u >= T::one() {
        T::one()
    } else {
        u * u * u * (T::lit(10.0) + u * (T::lit(-15.0) + T::lit(6.0) * u))
    }
}

/// `(psi, psi', psi'')` at `u`.
pub fn psi_derivatives<T: Real>(u: T) -> (T, T, T) {
    if u <= T::zero() {
        (T::zero(), T::zero(), T::zero())
    } else if u >= T::one() {
        (T::one(), T::zero(), T::zero())
    } else {
        let u2 = u * u;
        let d1 = T::lit(30.0) * u2 * (T::one() - u) * (T::one() - u);
        let d2 = T::lit(60.0) * u * (T::one() - u) * (T::one() - u - u);
        (psi(u), d1, d2)
    }
}

/// `x1 < x2 < x3 < x4` around `xi`, each `floor(n xi + c sqrt(n)) / n`
/// for `c = -2, -1, 1, 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BridgeNodes<T> {
    pub n: usize,
    pub xi: T,
    /// Integer numerators `floor(n xi + c sqrt(n))`.
    pub index: [i64; 4],
    pub x1: T,
    pub x2: T,
    pub x3: T,
    pub x4: T,
    pub valid: bool,
}

impl<T: Real> BridgeNodes<T> {
    pub fn as_array(&self) -> [T; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::InvalidNodes {
                n: self.n,
                xi: self.xi.as_f64(),
                min_n: min_valid_n(self.xi.as_f64()),
            })
        }
    }

    /// True when `k/n` lies in the chord-only segment `[x2, x3]`.
    pub fn in_chord_segment(&self, k: usize) -> bool {
        let k = k as i64;
        k >= self.index[1] && k <= self.index[2]
    }
}

pub fn compute_nodes<T: Real>(n: usize, xi: T) -> BridgeNodes<T> {
    let nf = T::from_usize_lossy(n.max(1));
    let root = nf.sqrt();
    let centre = nf * xi;
    let index = [-2.0, -1.0, 1.0, 2.0].map(|c| {
        (centre + T::lit(c) * root)
            .floor()
            .to_i64()
            .unwrap_or(i64::MIN)
    });
    let x = index.map(|i| T::from_i64(i).unwrap_or(T::nan()) / nf);
    let in_range = xi > T::zero() && xi < T::one() && n >= 1;
    let valid = in_range
        && index[0] > 0
        && index[3] < n as i64
        && index.windows(2).all(|p| p[0] < p[1]);
    BridgeNodes {
        n,
        xi,
        index,
        x1: x[0],
        x2: x[1],
        x3: x[2],
        x4: x[3],
        valid,
    }
}

/// Smallest `n0` such that the nodes are valid for every `n >= n0`.
pub fn min_valid_n(xi: f64) -> usize {
    if !(xi > 0.0 && xi < 1.0) {
        return usize::MAX;
    }
    let m = xi.min(1.0 - xi);
    // beyond this, n m - 2 sqrt(n) >= 2 and validity cannot fail again
    let root = (2.0 + (4.0 + 8.0 * m).sqrt()) / (2.0 * m);
    let bound = (root * root).ceil() as usize + 2;
    let mut last_bad = 0;
    for n in 1..=bound {
        if !compute_nodes(n, xi).valid {
            last_bad = n;
        }
    }
    last_bad + 1
}

/// Which smoothing ramp of the bridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ramp {
    /// `psi((x - x1) / (x2 - x1))`
    Left,
    /// `psi((x - x3) / (x4 - x3))`
    Right,
}

#[inline]
pub(crate) fn ramp_unchecked<T: Real>(nodes: &BridgeNodes<T>, which: Ramp, x: T) -> T {
    match which {
        Ramp::Left => psi((x - nodes.x1) / (nodes.x2 - nodes.x1)),
        Ramp::Right => psi((x - nodes.x3) / (nodes.x4 - nodes.x3)),
    }
}

pub fn psi_bar<T: Real>(nodes: &BridgeNodes<T>, which: Ramp, x: T) -> Result<T> {
    nodes.require_valid()?;
    Ok(ramp_unchecked(nodes, which, x))
}

/// The chord through `(x1, f(x1))` and `(x4, f(x4))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearJoiner<T> {
    pub x1: T,
    pub x4: T,
    pub f1: T,
    pub f4: T,
}

impl<T: Real> LinearJoiner<T> {
    #[inline]
    pub fn eval(&self, x: T) -> T {
        let span = self.x1 - self.x4;
        (x - self.x4) / span * self.f1 + (self.x1 - x) / span * self.f4
    }
}

fn finite_value<T: Real>(f: &TestFunction<T>, x: T) -> Result<T> {
    let v = f.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            name: f.name.clone(),
            x: x.as_f64(),
        })
    }
}

pub fn linear_joiner<T: Real>(f: &TestFunction<T>, nodes: &BridgeNodes<T>) -> Result<LinearJoiner<T>> {
    nodes.require_valid()?;
    Ok(LinearJoiner {
        x1: nodes.x1,
        x4: nodes.x4,
        f1: finite_value(f, nodes.x1)?,
        f4: finite_value(f, nodes.x4)?,
    })
}

/// `F_n(f, x)` by the four-branch display. `f` is never called on `[x2, x3]`.
pub fn surrogate_eval<T: Real>(f: &TestFunction<T>, nodes: &BridgeNodes<T>, x: T) -> Result<T> {
    crate::basis::check_unit(x)?;
    let p = linear_joiner(f, nodes)?;
    Ok(surrogate_with(f, nodes, &p, x))
}

pub(crate) fn surrogate_with<T: Real>(
    f: &TestFunction<T>,
    nodes: &BridgeNodes<T>,
    p: &LinearJoiner<T>,
    x: T,
) -> T {
    if x <= nodes.x1 || x >= nodes.x4 {
        f.eval(x)
    } else if x < nodes.x2 {
        let s = ramp_unchecked(nodes, Ramp::Left, x);
        f.eval(x) * (T::one() - s) + s * p.eval(x)
    } else if x <= nodes.x3 {
        p.eval(x)
    } else {
        let s = ramp_unchecked(nodes, Ramp::Right, x);
        p.eval(x) * (T::one() - s) + s * f.eval(x)
    }
}

/// `F_n(f, x)` by the single-line form
/// `f (1 - psi1 + psi2) + psi1 (1 - psi2) P`; the `f` term is skipped where
/// its coefficient vanishes.
pub fn surrogate_eval_blended<T: Real>(
    f: &TestFunction<T>,
    nodes: &BridgeNodes<T>,
    x: T,
) -> Result<T> {
    crate::basis::check_unit(x)?;
    let p = linear_joiner(f, nodes)?;
    let s1 = ramp_unchecked(nodes, Ramp::Left, x);
    let s2 = ramp_unchecked(nodes, Ramp::Right, x);
    let cf = T::one() - s1 + s2;
    let cp = s1 * (T::one() - s2);
    let fpart = if cf == T::zero() { T::zero() } else { cf * f.eval(x) };
    Ok(fpart + cp * p.eval(x))
}
