//! The singular weight `|x - xi|^alpha`, the step weights `phi` and
//! `delta_n`, grid sup-norms, and the corpus of test functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// `w(x) = |x - xi|^alpha` with `0 < xi < 1`, `alpha > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularWeight<T> {
    pub xi: T,
    pub alpha: T,
}

impl<T: Real> SingularWeight<T> {
    pub fn new(xi: T, alpha: T) -> Result<Self> {
        if !(xi > T::zero() && xi < T::one()) {
            return Err(domain("xi", xi.as_f64(), "(0, 1)"));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(domain("alpha", alpha.as_f64(), "(0, inf)"));
        }
        Ok(Self { xi, alpha })
    }

    /// Weight value without the domain check; exactly zero at `xi`.
    #[inline]
    pub fn at(&self, x: T) -> T {
        let d = (x - self.xi).abs();
        if d == T::zero() {
            T::zero()
        } else {
            d.powf(self.alpha)
        }
    }

    pub fn eval(&self, x: T) -> Result<T> {
        crate::basis::check_unit(x)?;
        Ok(self.at(x))
    }
}

/// `phi(x) = sqrt(x (1 - x))`.
pub fn phi<T: Real>(x: T) -> Result<T> {
    crate::basis::check_unit(x)?;
    Ok(phi_unchecked(x))
}

#[inline]
pub(crate) fn phi_unchecked<T: Real>(x: T) -> T {
    (x * (T::one() - x)).max(T::zero()).sqrt()
}

/// `delta_n(x) = phi(x) + 1/sqrt(n)`.
pub fn delta_n<T: Real>(n: usize, x: T) -> Result<T> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    Ok(phi(x)? + T::from_usize_lossy(n).sqrt().recip())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Uniform,
    Chebyshev,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Uniform => "uniform",
            Placement::Chebyshev => "chebyshev",
        })
    }
}

/// Finite point set standing in for `[0, 1]` when taking suprema.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub count: usize,
    /// Points with `|x - xi| < exclusion_radius` are dropped.
    pub exclusion_radius: f64,
    pub placement: Placement,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            count: 4097,
            exclusion_radius: 0.0,
            placement: Placement::Chebyshev,
        }
    }
}

impl GridSpec {
    pub fn new(count: usize, exclusion_radius: f64, placement: Placement) -> Result<Self> {
        if count < 2 {
            return Err(domain("grid count", count as f64, "count >= 2"));
        }
        if !(exclusion_radius >= 0.0) {
            return Err(domain("exclusion radius", exclusion_radius, "[0, inf)"));
        }
        Ok(Self {
            count,
            exclusion_radius,
            placement,
        })
    }

    /// Sorted, deduplicated grid including both endpoints and `extra`.
    pub fn points<T: Real>(&self, xi: T, extra: &[T]) -> Vec<T> {
        let m = self.count.max(2) - 1;
        let mf = T::from_usize_lossy(m);
        let mut pts: Vec<T> = (0..=m)
            .map(|j| {
                let j = T::from_usize_lossy(j);
                match self.placement {
                    Placement::Uniform => j / mf,
                    Placement::Chebyshev => {
                        let s = (T::FRAC_PI_2() * j / mf).sin();
                        s * s
                    }
                }
            })
            .collect();
        pts.push(T::zero());
        pts.push(T::one());
        pts.extend(
            extra
                .iter()
                .copied()
                .filter(|x| *x >= T::zero() && *x <= T::one()),
        );
        let r = T::lit(self.exclusion_radius);
        if r > T::zero() {
            pts.retain(|x| (*x - xi).abs() >= r);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("grid points are finite"));
        pts.dedup();
        pts
    }
}

/// Shared scalar closure.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    /// Affine; reproduced exactly by the operator.
    Linear,
    /// Has a bounded weighted second derivative.
    Smooth,
    /// Non-smooth at `xi`.
    Singular,
}

/// A named function on `[0, 1] \ {xi}` with the metadata the experiments use.
#[derive(Clone)]
pub struct TestFunction<T> {
    pub name: String,
    pub kind: FunctionKind,
    /// Exponent `beta` of the `|x - xi|^beta` behaviour, for singular members.
    pub singularity_exponent: Option<T>,
    /// Rate exponent the direct theorem predicts, from the calibration table.
    pub expected_alpha0: Option<T>,
    pub lambda: T,
    value: ScalarFn<T>,
    second: Option<ScalarFn<T>>,
}

impl<T: fmt::Debug> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("singularity_exponent", &self.singularity_exponent)
            .field("expected_alpha0", &self.expected_alpha0)
            .field("lambda", &self.lambda)
            .field("has_second_derivative", &self.second.is_some())
            .finish()
    }
}

impl<T: Real> TestFunction<T> {
    pub fn new(
        name: impl Into<String>,
        kind: FunctionKind,
        value: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            singularity_exponent: None,
            expected_alpha0: None,
            lambda: T::zero(),
            value: Arc::new(value),
            second: None,
        }
    }

    pub fn with_second_derivative(mut self, d2: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(d2));
        self
    }

    pub fn with_singularity_exponent(mut self, beta: T) -> Self {
        self.singularity_exponent = Some(beta);
        self
    }

    pub fn with_expected_alpha0(mut self, alpha0: Option<T>, lambda: T) -> Self {
        self.expected_alpha0 = alpha0;
        self.lambda = lambda;
        self
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        (self.value)(x)
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second.is_some()
    }

    pub fn second_derivative(&self, x: T) -> Option<T> {
        self.second.as_ref().map(|d2| d2(x))
    }

    /// `w(x) f(x)`, taking the limit value 0 at `xi` without evaluating `f`.
    #[inline]
    pub fn weighted(&self, w: &SingularWeight<T>, x: T) -> T {
        if x == w.xi {
            T::zero()
        } else {
            w.at(x) * self.eval(x)
        }
    }

    /// `a f + b g`. The result keeps a second derivative only if both have one.
    pub fn combine(a: T, f: &Self, b: T, g: &Self) -> Self {
        let (fv, gv) = (f.value.clone(), g.value.clone());
        let name = format!("{}*{}+{}*{}", a, f.name, b, g.name);
        let kind = match (f.kind, g.kind) {
            (FunctionKind::Linear, FunctionKind::Linear) => FunctionKind::Linear,
            (FunctionKind::Singular, _) | (_, FunctionKind::Singular) => FunctionKind::Singular,
            _ => FunctionKind::Smooth,
        };
        let mut out = Self::new(name, kind, move |x| a * fv(x) + b * gv(x));
        if let (Some(fs), Some(gs)) = (f.second.clone(), g.second.clone()) {
            out.second = Some(Arc::new(move |x| a * fs(x) + b * gs(x)));
        }
        out
    }

    /// A copy that agrees with `self` outside `(lo, hi)` and is shifted by
    /// `bump` inside.
    pub fn perturbed_inside(&self, lo: T, hi: T, bump: T) -> Self {
        let fv = self.value.clone();
        let mut out = self.clone();
        out.name = format!("{}~perturbed", self.name);
        out.value = Arc::new(move |x| if x > lo && x < hi { fv(x) + bump } else { fv(x) });
        out.second = None;
        out
    }
}

/// `max |w(x) f(x)|` over `points`; non-finite products are reported with
/// the offending abscissa.
pub fn weighted_sup_over<T: Real>(
    name: &str,
    points: &[T],
    mut weighted: impl FnMut(T) -> T,
) -> Result<T> {
    let mut best = T::zero();
    for &x in points {
        let v = weighted(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                name: name.to_string(),
                x: x.as_f64(),
            });
        }
        best = best.max(v.abs());
    }
    Ok(best)
}

/// Grid approximation of `||w f||` on `[0, 1]`.
pub fn weighted_sup_norm<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
    g: &GridSpec,
) -> Result<T> {
    let pts = g.points(w.xi, &[]);
    weighted_sup_over(&f.name, &pts, |x| f.weighted(w, x))
}

/// `|w f|` at `xi ± 10^-j`, `j = 2..=8`, as `(distance, left, right)`.
pub fn weighted_limit_samples<T: Real>(
    f: &TestFunction<T>,
    w: &SingularWeight<T>,
) -> Vec<(T, T, T)> {
    (2..=8)
        .map(|j| {
            let d = T::lit(10f64.powi(-j));
            let l = f.weighted(w, w.xi - d).abs();
            let r = f.weighted(w, w.xi + d).abs();
            (d, l, r)
        })
        .collect()
}

/// Numerical membership test for `C_w`: `|w f|` shrinks toward 0 as `x -> xi`
/// on both sides, strictly from distance `1e-4` inward, and loses at least
/// half its size over the sampled decades.
pub fn is_weighted_continuous<T: Real>(f: &TestFunction<T>, w: &SingularWeight<T>) -> bool {
    let s = weighted_limit_samples(f, w);
    let decreasing = s[2..]
        .windows(2)
        .all(|p| shrinks(p[0].1, p[1].1) && shrinks(p[0].2, p[1].2));
    let (_, l0, r0) = s[0];
    let (_, l, r) = s[s.len() - 1];
    let small = |last: T, first: T| last <= first * T::lit(0.5);
    decreasing && small(l, l0) && small(r, r0) && l.is_finite() && r.is_finite()
}

fn shrinks<T: Real>(outer: T, inner: T) -> bool {
    inner < outer || inner == T::zero()
}

/// Names of the corpus members, in corpus order.
pub const CORPUS_NAMES: [&str; 8] = [
    "linear",
    "constant",
    "square",
    "cubic",
    "abs_beta_0.5",
    "abs_beta_1.0",
    "abs_beta_1.5",
    "smooth_step",
];

/// Width of the `tanh` transition in `smooth_step`.
pub const SMOOTH_STEP_WIDTH: f64 = 0.1;

/// Test functions for weight `w`; singular members carry the calibrated rate
/// exponent for `(w, lambda)` when one is on record.
pub fn corpus<T: Real>(w: &SingularWeight<T>, lambda: T) -> Vec<TestFunction<T>> {
    let xi = w.xi;
    let two = T::lit(2.0);
    let mut out = vec![
        TestFunction::new("linear", FunctionKind::Linear, |x: T| T::lit(3.0) * x - T::one())
            .with_second_derivative(|_| T::zero()),
        TestFunction::new("constant", FunctionKind::Linear, |_| T::lit(2.0))
            .with_second_derivative(|_| T::zero()),
        TestFunction::new("square", FunctionKind::Smooth, |x: T| x * x)
            .with_second_derivative(move |_| two),
        TestFunction::new("cubic", FunctionKind::Smooth, |x: T| x * x * x + x * x)
            .with_second_derivative(|x: T| T::lit(6.0) * x + T::lit(2.0)),
    ];
    for beta in [0.5, 1.0, 1.5] {
        let b = T::lit(beta);
        let name = format!("abs_beta_{beta:.1}");
        let target = calibration::lookup(&name, w.xi.as_f64(), w.alpha.as_f64(), lambda.as_f64())
            .map(T::lit);
        out.push(
            TestFunction::new(name, FunctionKind::Singular, move |x: T| (x - xi).abs().powf(b))
                .with_singularity_exponent(b)
                .with_expected_alpha0(target, lambda),
        );
    }
    let eps = T::lit(SMOOTH_STEP_WIDTH);
    out.push(
        TestFunction::new("smooth_step", FunctionKind::Smooth, move |x: T| {
            ((x - xi) / eps).tanh()
        })
        .with_second_derivative(move |x: T| {
            let t = ((x - xi) / eps).tanh();
            -two / (eps * eps) * t * (T::one() - t * t)
        }),
    );
    for f in &mut out {
        f.lambda = lambda;
    }
    out
}

/// Looks up one corpus member by name.
pub fn corpus_function<T: Real>(
    name: &str,
    w: &SingularWeight<T>,
    lambda: T,
) -> Result<TestFunction<T>> {
    corpus(w, lambda)
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}

/// The zero function, a trivial K-functional candidate.
pub fn zero_function<T: Real>() -> TestFunction<T> {
    TestFunction::new("zero", FunctionKind::Linear, |_| T::zero()).with_second_derivative(|_| T::zero())
}
