use bbar_core::basis::{basis_eval, basis_row, basis_row_recurrence, central_moment_sum, BasisPoint, MomentQuery};
use bbar_core::bridge::{compute_nodes, min_valid_n, psi, surrogate_eval, surrogate_eval_blended};
use bbar_core::moduli::{kfunctional_upper, lemma3_ratio, omega2, omega2_mainpart, smoothing_candidates};
use bbar_core::operator::build_surrogate;
use bbar_core::weight::{corpus, corpus_function, FunctionKind, GridSpec, Placement, TestFunction, CORPUS_NAMES};
use bbar_core::{Function, Modulus, Weight};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn small_grid() -> GridSpec {
    GridSpec::new(257, 0.0, Placement::Chebyshev).unwrap()
}

fn valid_n(xi: f64) -> impl Strategy<Value = usize> {
    min_valid_n(xi)..2048usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity_and_moments(n in 1usize..4096, x in 0.0f64..=1.0) {
        let row = basis_row(n, x).unwrap();
        let sum: f64 = row.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        let first: f64 = row.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((first - n as f64 * x).abs() <= 1e-10 * (n as f64 * x).max(1.0));
        let second = central_moment_sum(&MomentQuery::central(n, x, 2.0)).unwrap();
        let var = n as f64 * x * (1.0 - x);
        prop_assert!((second - var).abs() <= 1e-10 * var.max(1.0), "{} vs {}", second, var);
    }

    #[test]
    fn basis_is_symmetric(n in 1usize..3000, k_frac in 0.0f64..=1.0, m in 0u32..=(1 << 20)) {
        // dyadic x so that 1 - x is exact
        let x = m as f64 / (1 << 20) as f64;
        let k = (k_frac * n as f64).round() as usize;
        let a = basis_eval(BasisPoint::new(n, k, x).unwrap());
        let b = basis_eval(BasisPoint::new(n, n - k, 1.0 - x).unwrap());
        // log-space evaluation: relative error grows with |ln p|
        if a != b {
            let tol = 1e-14 * (1.0 + a.max(b).ln().abs());
            prop_assert!((a - b).abs() <= tol * a.max(b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn log_space_agrees_with_recurrence(n in 1usize..400, x in 0.0f64..=1.0) {
        let direct: Vec<f64> = (0..=n).map(|k| basis_eval(BasisPoint::new(n, k, x).unwrap())).collect();
        let rec = basis_row_recurrence(n, x).unwrap();
        for (a, b) in direct.iter().zip(&rec) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn psi_is_antisymmetric_about_one_half(u in -0.5f64..1.5) {
        prop_assert!((psi(u) + psi(1.0 - u) - 1.0).abs() <= 1e-14);
        prop_assert!((0.0..=1.0).contains(&psi(u)));
    }

    #[test]
    fn surrogate_forms_agree(xi in 0.1f64..0.9, n_frac in 0.0f64..1.0, x in 0.0f64..=1.0, which in 0usize..8) {
        let w = Weight::new(xi, 1.0).unwrap();
        let n = min_valid_n(xi) + (n_frac * 2000.0) as usize;
        let nodes = compute_nodes(n, xi);
        let f = corpus_function(CORPUS_NAMES[which], &w, 0.0).unwrap();
        let a = surrogate_eval(&f, &nodes, x).unwrap();
        let b = surrogate_eval_blended(&f, &nodes, x).unwrap();
        prop_assert!(close(a, b, 1e-13), "{} vs {}", a, b);
    }

    #[test]
    fn chord_segment_values_are_never_read(xi in 0.1f64..0.9, n_frac in 0.0f64..1.0, bump in -10.0f64..10.0) {
        let w = Weight::new(xi, 1.0).unwrap();
        let n = min_valid_n(xi) + (n_frac * 3000.0) as usize;
        let nodes = compute_nodes(n, xi);
        let f = corpus_function("abs_beta_0.5", &w, 0.0).unwrap();
        let g = f.perturbed_inside(nodes.x2, nodes.x3, bump);
        let poisoned = TestFunction::new("poisoned", FunctionKind::Singular, {
            let (lo, hi, inner) = (nodes.x2, nodes.x3, f.clone());
            move |x: f64| if x > lo && x < hi { f64::NAN } else { inner.eval(x) }
        });
        let base = build_surrogate(&f, n, &w).unwrap();
        prop_assert_eq!(&base.values, &build_surrogate(&g, n, &w).unwrap().values);
        prop_assert_eq!(&base.values, &build_surrogate(&poisoned, n, &w).unwrap().values);
    }

    #[test]
    fn operator_is_positive(xi in 0.1f64..0.9, n_frac in 0.0f64..1.0, x in 0.0f64..=1.0) {
        let w = Weight::new(xi, 0.5).unwrap();
        let n = min_valid_n(xi) + (n_frac * 2000.0) as usize;
        for name in ["square", "abs_beta_0.5", "abs_beta_1.5", "constant"] {
            let f = corpus_function(name, &w, 0.0).unwrap();
            prop_assert!(build_surrogate(&f, n, &w).unwrap().apply(x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn operator_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, n in valid_n(0.5), x in 0.0f64..=1.0) {
        let w = Weight::new(0.5, 1.0).unwrap();
        let f = corpus_function("abs_beta_1.0", &w, 0.0).unwrap();
        let g = corpus_function("cubic", &w, 0.0).unwrap();
        let h = Function::combine(a, &f, b, &g);
        let apply = |f: &Function| build_surrogate(f, n, &w).unwrap().apply(x).unwrap();
        let lhs = apply(&h);
        let rhs = a * apply(&f) + b * apply(&g);
        prop_assert!(close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn lemma3_ratio_stays_bounded(x in 0.05f64..0.95, h in 0.001f64..0.25, lambda in 0.0f64..=1.0, beta in 0.0f64..=1.0) {
        if let Some(r) = lemma3_ratio(x, h, lambda, beta, 24) {
            prop_assert!(r > 0.0 && r <= 8.0, "ratio {}", r);
        }
    }
}

fn modulus(f: &Function, w: Weight, lambda: f64, t: f64) -> (f64, f64) {
    let q = Modulus::new(f.clone(), w, lambda, t).unwrap().with_grid(small_grid());
    (omega2(&q).unwrap(), omega2_mainpart(&q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn moduli_scale_with_the_function(c in -4.0f64..4.0, lambda in 0.0f64..=1.0, t in 0.01f64..0.25) {
        let w = Weight::new(0.5, 1.0).unwrap();
        let f = corpus_function("abs_beta_0.5", &w, lambda).unwrap();
        let zero = bbar_core::weight::zero_function();
        let g = Function::combine(c, &f, 0.0, &zero);
        let (a, am) = modulus(&f, w, lambda, t);
        let (b, bm) = modulus(&g, w, lambda, t);
        prop_assert!(close(b, c.abs() * a, 1e-12));
        prop_assert!(close(bm, c.abs() * am, 1e-12));
    }

    #[test]
    fn main_part_is_sandwiched(lambda in 0.0f64..=1.0, t in 0.01f64..0.25, which in 0usize..8) {
        let w = Weight::new(0.5, 1.0).unwrap();
        let f = corpus_function(CORPUS_NAMES[which], &w, lambda).unwrap();
        let (full, main) = modulus(&f, w, lambda, t);
        prop_assert!(main <= 3.0 * full + 1e-14, "{} vs {}", main, full);
    }
}

#[test]
fn moduli_grow_with_t() {
    let w = Weight::new(0.5, 1.0).unwrap();
    for lambda in [0.0, 0.5, 1.0] {
        for f in corpus(&w, lambda) {
            let mut last = (0.0, 0.0);
            for j in (2..=10).rev() {
                let (full, main) = modulus(&f, w, lambda, 2f64.powi(-j));
                // linear members sit at rounding level
                assert!(full >= last.0 * (1.0 - 1e-12) - 1e-14, "{} omega at 2^-{j}", f.name);
                assert!(main >= last.1 * (1.0 - 1e-12) - 1e-14, "{} Omega at 2^-{j}", f.name);
                last = (full, main);
            }
        }
    }
}

#[test]
fn kfunctional_bounds_the_main_part_modulus() {
    // Omega(f, t) <= C K(f, t^2) with a modest C for every corpus member
    let w = Weight::new(0.5, 1.0).unwrap();
    for lambda in [0.0, 0.5, 1.0] {
        for f in corpus(&w, lambda) {
            let candidates = smoothing_candidates(&f, &w);
            for t in [0.25, 0.0625, 0.015625] {
                let (_, main) = modulus(&f, w, lambda, t);
                let k = kfunctional_upper(&f, &w, lambda, t, &candidates, &small_grid()).unwrap();
                assert!(main <= 4.0 * k + 1e-14, "{}: Omega {main}, K {k}, t {t}", f.name);
            }
        }
    }
}

#[test]
fn kfunctional_examples() {
    let w = Weight::new(0.5, 1.0).unwrap();
    let grid = small_grid();
    let line = corpus_function("linear", &w, 0.0).unwrap();
    let k = kfunctional_upper(&line, &w, 0.0, 0.1, &smoothing_candidates(&line, &w), &grid).unwrap();
    assert!(k.abs() <= 1e-15);
    // g = f = x^2: only the curvature term, t^2 max |x - 1/2| * 2 = t^2
    let sq = corpus_function("square", &w, 0.0).unwrap();
    let k = kfunctional_upper(&sq, &w, 0.0, 0.1, &[sq.clone()], &grid).unwrap();
    assert!((k - 0.01).abs() <= 1e-15);
}
