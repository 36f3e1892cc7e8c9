//! Bernstein basis polynomials `p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)`.
//!
//! Single values are computed in log space with the saddle-point
//! decomposition of the binomial probability (Stirling remainders plus a
//! deviance term), which keeps full relative precision for `n` well past
//! the point where `C(n,k)` overflows. Whole rows are produced by the
//! multiplicative recurrence between neighbours, re-anchored to the
//! log-space value at fixed intervals so rounding cannot drift.

use crate::error::{domain, Result};
use crate::scalar::{Compensated, Real};

/// Recurrence steps between log-space re-anchors in row evaluation.
const ANCHOR_EVERY: usize = 32;

/// Default relative cutoff below which [`basis_window`] drops a term.
pub const WINDOW_CUTOFF: f64 = 1e-30;

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)` for n = 0..=15.
const STIRLING_REMAINDER: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_09,
    0.027_677_925_684_998_339_15,
    0.020_790_672_103_765_093_11,
    0.016_644_691_189_821_192_16,
    0.013_876_128_823_070_748_00,
    0.011_896_709_945_891_770_10,
    0.010_411_265_261_972_096_50,
    0.009_255_462_182_712_732_918,
    0.008_330_563_433_362_871_257,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_866,
    0.006_408_994_188_004_207_068,
    0.005_951_370_112_758_847_736,
    0.005_554_733_551_962_801_371,
];

/// A validated `(n, k, x)` triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisPoint<T> {
    pub n: usize,
    pub k: usize,
    pub x: T,
}

impl<T: Real> BasisPoint<T> {
    pub fn new(n: usize, k: usize, x: T) -> Result<Self> {
        check_degree(n)?;
        check_unit(x)?;
        if k > n {
            return Err(domain("k", k as f64, "[0, n]"));
        }
        Ok(Self { n, k, x })
    }
}

/// Parameters for the moment sums of the basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentQuery<T> {
    pub n: usize,
    pub x: T,
    pub gamma: T,
    pub u: T,
    pub v: T,
}

impl<T: Real> MomentQuery<T> {
    /// Query for `sum_k p_{n,k}(x) |k - n x|^gamma`.
    pub fn central(n: usize, x: T, gamma: T) -> Self {
        Self {
            n,
            x,
            gamma,
            u: T::zero(),
            v: T::zero(),
        }
    }

    /// Query for `sum_{k=1}^{n-1} (k/n)^-u (1-k/n)^-v p_{n,k}(x)`.
    pub fn inverse(n: usize, x: T, u: T, v: T) -> Self {
        Self {
            n,
            x,
            gamma: T::zero(),
            u,
            v,
        }
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    Ok(())
}

pub(crate) fn check_unit<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(domain("x", x.as_f64(), "[0, 1]"));
    }
    Ok(())
}

fn stirling_remainder<T: Real>(n: usize) -> T {
    if n < STIRLING_REMAINDER.len() {
        return T::lit(STIRLING_REMAINDER[n]);
    }
    let s0 = T::lit(1.0 / 12.0);
    let s1 = T::lit(1.0 / 360.0);
    let s2 = T::lit(1.0 / 1260.0);
    let s3 = T::lit(1.0 / 1680.0);
    let s4 = T::lit(1.0 / 1188.0);
    let nf = T::from_usize_lossy(n);
    let nn = nf * nf;
    if n > 500 {
        (s0 - s1 / nn) / nf
    } else if n > 80 {
        (s0 - (s1 - s2 / nn) / nn) / nf
    } else if n > 35 {
        (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / nf
    } else {
        (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x/m) + m - x`, evaluated by series when `x ~ m`.
fn deviance<T: Real>(x: T, m: T) -> T {
    let diff = x - m;
    if diff.abs() < T::lit(0.1) * (x + m) {
        let v = diff / (x + m);
        let v2 = v * v;
        let mut s = diff * v;
        let mut ej = (x + x) * v;
        let mut j = 1usize;
        loop {
            ej = ej * v2;
            let s1 = s + ej / T::from_usize_lossy(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1;
            if j > 1000 {
                return s;
            }
        }
    }
    x * (x / m).ln() + m - x
}

/// `p_{n,k}` at probability `x` with complement `q = 1 - x`, no checks.
pub(crate) fn bernstein_unchecked<T: Real>(n: usize, k: usize, x: T, q: T) -> T {
    if x == T::zero() {
        return if k == 0 { T::one() } else { T::zero() };
    }
    if q == T::zero() {
        return if k == n { T::one() } else { T::zero() };
    }
    let nf = T::from_usize_lossy(n);
    if k == 0 {
        let lc = if x < T::lit(0.1) {
            -deviance(nf, nf * q) - nf * x
        } else {
            nf * q.ln()
        };
        return lc.exp();
    }
    if k == n {
        let lc = if q < T::lit(0.1) {
            -deviance(nf, nf * x) - nf * q
        } else {
            nf * x.ln()
        };
        return lc.exp();
    }
    let kf = T::from_usize_lossy(k);
    let rest = T::from_usize_lossy(n - k);
    let lc = stirling_remainder::<T>(n)
        - stirling_remainder::<T>(k)
        - stirling_remainder::<T>(n - k)
        - deviance(kf, nf * x)
        - deviance(rest, nf * q);
    let lf = (T::PI() + T::PI()).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - T::lit(0.5) * lf).exp()
}

/// `p_{n,k}(x)`.
pub fn basis_eval<T: Real>(p: BasisPoint<T>) -> T {
    bernstein_unchecked(p.n, p.k, p.x, T::one() - p.x)
}

/// The contiguous run of basis values that are not negligible at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisWindow<T> {
    /// Index of `weights[0]`.
    pub start: usize,
    pub weights: Vec<T>,
}

impl<T: Real> BasisWindow<T> {
    /// Iterates `(k, p_{n,k}(x))`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.start + i, w))
    }

    /// `sum_k coeffs[k] p_{n,k}(x)` over the window, compensated.
    pub fn dot(&self, coeffs: &[T]) -> T {
        let mut acc = Compensated::new();
        for (k, w) in self.iter() {
            acc.add(coeffs[k] * w);
        }
        acc.value()
    }
}

/// Walks outward from the mode. `cutoff` is relative to the mode value; with
/// `None` the walk continues until values underflow to zero.
fn walk_row<T: Real>(n: usize, x: T, cutoff: Option<T>) -> BasisWindow<T> {
    if x == T::zero() {
        return BasisWindow {
            start: 0,
            weights: vec![T::one()],
        };
    }
    if x == T::one() {
        return BasisWindow {
            start: n,
            weights: vec![T::one()],
        };
    }
    let q = T::one() - x;
    let ratio = x / q;
    let nf = T::from_usize_lossy(n);
    let mode = ((nf + T::one()) * x).floor().to_usize().unwrap_or(n).min(n);
    let peak = bernstein_unchecked(n, mode, x, q);
    let floor = match cutoff {
        Some(c) => c * peak,
        None => T::min_positive_value() * T::lit(4503599627370496.0),
    };
    let exact_tail = cutoff.is_none();

    let mut up = Vec::new();
    let mut p = peak;
    let mut k = mode;
    while k < n {
        let next = if (k + 1 - mode) % ANCHOR_EVERY == 0 || (exact_tail && p < floor) {
            bernstein_unchecked(n, k + 1, x, q)
        } else {
            p * T::from_usize_lossy(n - k) / T::from_usize_lossy(k + 1) * ratio
        };
        if next == T::zero() || (!exact_tail && next < floor) {
            break;
        }
        up.push(next);
        p = next;
        k += 1;
    }

    let mut down = Vec::new();
    let mut p = peak;
    let mut k = mode;
    while k > 0 {
        let next = if (mode - (k - 1)) % ANCHOR_EVERY == 0 || (exact_tail && p < floor) {
            bernstein_unchecked(n, k - 1, x, q)
        } else {
            p * T::from_usize_lossy(k) / T::from_usize_lossy(n - k + 1) / ratio
        };
        if next == T::zero() || (!exact_tail && next < floor) {
            break;
        }
        down.push(next);
        p = next;
        k -= 1;
    }

    let start = mode - down.len();
    let mut weights = Vec::with_capacity(down.len() + 1 + up.len());
    weights.extend(down.into_iter().rev());
    weights.push(peak);
    weights.extend(up);
    BasisWindow { start, weights }
}

/// Basis values at `x` that exceed `cutoff` times the largest one.
pub fn basis_window<T: Real>(n: usize, x: T, cutoff: T) -> Result<BasisWindow<T>> {
    check_degree(n)?;
    check_unit(x)?;
    Ok(walk_row(n, x, Some(cutoff)))
}

/// All `n + 1` values `p_{n,0}(x), ..., p_{n,n}(x)`.
pub fn basis_row<T: Real>(n: usize, x: T) -> Result<Vec<T>> {
    check_degree(n)?;
    check_unit(x)?;
    let w = walk_row(n, x, None);
    let mut row = vec![T::zero(); n + 1];
    row[w.start..w.start + w.weights.len()].copy_from_slice(&w.weights);
    Ok(row)
}

/// Row by the triangular recurrence `p_{m+1,k} = (1-x) p_{m,k} + x p_{m,k-1}`.
///
/// O(n^2) and only convex combinations, so it is slow but independent of the
/// log-space path; kept as a cross-check.
pub fn basis_row_recurrence<T: Real>(n: usize, x: T) -> Result<Vec<T>> {
    check_degree(n)?;
    check_unit(x)?;
    let q = T::one() - x;
    let mut row = vec![T::zero(); n + 1];
    row[0] = T::one();
    for m in 1..=n {
        for k in (1..=m).rev() {
            row[k] = q * row[k] + x * row[k - 1];
        }
        row[0] = q * row[0];
    }
    Ok(row)
}

/// `sum_k p_{n,k}(x) |k - n x|^gamma` by direct summation. Negative `gamma`
/// is rejected since `k = n x` would divide by zero.
pub fn central_moment_sum<T: Real>(q: &MomentQuery<T>) -> Result<T> {
    check_degree(q.n)?;
    check_unit(q.x)?;
    if !(q.gamma >= T::zero()) || !q.gamma.is_finite() {
        return Err(domain("gamma", q.gamma.as_f64(), "[0, inf)"));
    }
    let center = T::from_usize_lossy(q.n) * q.x;
    let w = walk_row(q.n, q.x, None);
    Ok(w
        .iter()
        .map(|(k, p)| p * (T::from_usize_lossy(k) - center).abs().powf(q.gamma))
        .collect::<Compensated<T>>()
        .value())
}

/// `sum_{k=1}^{n-1} (k/n)^-u (1 - k/n)^-v p_{n,k}(x)` for interior `x`.
pub fn inverse_moment_sum<T: Real>(q: &MomentQuery<T>) -> Result<T> {
    if q.n < 2 {
        return Err(domain("n", q.n as f64, "n >= 2"));
    }
    if !(q.x > T::zero() && q.x < T::one()) {
        return Err(domain("x", q.x.as_f64(), "(0, 1)"));
    }
    if !(q.u >= T::zero()) {
        return Err(domain("u", q.u.as_f64(), "[0, inf)"));
    }
    if !(q.v >= T::zero()) {
        return Err(domain("v", q.v.as_f64(), "[0, inf)"));
    }
    let nf = T::from_usize_lossy(q.n);
    let w = walk_row(q.n, q.x, None);
    Ok(w
        .iter()
        .filter(|&(k, _)| k >= 1 && k < q.n)
        .map(|(k, p)| {
            let t = T::from_usize_lossy(k) / nf;
            p * t.powf(-q.u) * (T::one() - t).powf(-q.v)
        })
        .collect::<Compensated<T>>()
        .value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    #[test]
    fn small_values() {
        let p = |n, k, x| basis_eval(BasisPoint::new(n, k, x).unwrap());
        assert!(rel(p(2, 1, 0.5f64), 0.5) < 1e-15);
        assert!(rel(p(4, 2, 0.5f64), 0.375) < 1e-15);
        assert_eq!(p(7, 0, 0.0f64), 1.0);
        assert_eq!(p(7, 3, 0.0f64), 0.0);
        assert_eq!(p(7, 7, 1.0f64), 1.0);
        assert_eq!(p(7, 6, 1.0f64), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(BasisPoint::new(3, 4, 0.5f64).is_err());
        assert!(BasisPoint::new(3, 1, 1.5f64).is_err());
        assert!(BasisPoint::new(3, 1, -0.1f64).is_err());
        assert!(BasisPoint::new(3, 1, f64::NAN).is_err());
        assert!(basis_row(0, 0.5f64).is_err());
        assert!(central_moment_sum(&MomentQuery::central(5, 0.3f64, -1.0)).is_err());
        assert!(inverse_moment_sum(&MomentQuery::inverse(10, 0.0f64, 1.0, 0.0)).is_err());
        assert!(inverse_moment_sum(&MomentQuery::inverse(10, 1.0f64, 0.0, 0.0)).is_err());
    }

    #[test]
    fn rows() {
        let r = basis_row(2, 0.5f64).unwrap();
        for (a, b) in r.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = basis_row(5, 0.0f64).unwrap();
        assert_eq!(r, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let r = basis_row(5, 1.0f64).unwrap();
        assert_eq!(r, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let s: f64 = compensated_row_sum(&basis_row(50, 0.3f64).unwrap());
        assert!((s - 1.0).abs() < 1e-12);
    }

    fn compensated_row_sum(r: &[f64]) -> f64 {
        crate::scalar::compensated_sum(r.iter().copied())
    }

    #[test]
    fn moment_examples() {
        let v = central_moment_sum(&MomentQuery::central(10, 0.5f64, 2.0)).unwrap();
        assert!(rel(v, 2.5) < 1e-13);
        let v = central_moment_sum(&MomentQuery::central(37, 0.5f64, 0.0)).unwrap();
        assert!(rel(v, 1.0) < 1e-14);
        let v = inverse_moment_sum(&MomentQuery::inverse(10, 0.5f64, 0.0, 0.0)).unwrap();
        assert!(rel(v, 0.998046875) < 1e-14);
        assert!(v <= 1.0);
    }

    #[test]
    fn window_truncates_tails() {
        let w = basis_window(4096, 0.5f64, WINDOW_CUTOFF).unwrap();
        assert!(w.weights.len() < 800);
        let s = crate::scalar::compensated_sum(w.weights.iter().copied());
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_precision_row() {
        let r = basis_row(40, 0.25f32).unwrap();
        let s: f32 = r.iter().sum();
        assert!((s - 1.0).abs() < 1e-5);
    }
}
