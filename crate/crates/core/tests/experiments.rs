use bbar_core::experiments::{
    assess_trend, check_direct, check_lemma7, check_theorem1, check_theorem2, fit_rate, run_sweep, SweepSpec,
    TrendRule,
};
use bbar_core::operator::{build_surrogate, Branch};
use bbar_core::weight::{corpus, corpus_function, GridSpec, Placement};
use bbar_core::{Coefficients32, Error, Function32, Weight, Weight32};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(alpha: f64, lambda: f64) -> SweepSpec {
    SweepSpec::new(Weight::new(0.5, alpha).unwrap(), lambda)
        .with_n_values(vec![64, 128, 256, 512])
        .with_grid(GridSpec::new(513, 0.0, Placement::Chebyshev).unwrap())
}

#[test]
fn fit_recovers_a_noisy_power_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_016);
    for exponent in [-2.0, -1.5, -0.5, 0.0, 1.0] {
        let pairs: Vec<(f64, f64)> = (6..=14)
            .map(|j| {
                let n = 2f64.powi(j);
                let noise = 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
                (n, 3.0 * n.powf(exponent) * noise)
            })
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope - exponent).abs() <= 0.08, "{exponent}: {}", fit.slope);
        assert!(fit.residual < 0.05);
    }
}

#[test]
fn trend_rule_flags_growth_only() {
    let grow: Vec<(f64, f64)> = (6..=12).map(|j| (2f64.powi(j), 2f64.powi(j).powf(0.3))).collect();
    assert!(!assess_trend(&grow, TrendRule::default()).bounded);
    let decay: Vec<(f64, f64)> = (6..=12).map(|j| (2f64.powi(j), 2f64.powi(j).powf(-2.0))).collect();
    assert!(assess_trend(&decay, TrendRule::default()).bounded);
}

#[test]
fn sweeps_are_deterministic() {
    let spec = quick(1.0, 0.5);
    let functions = corpus(&spec.weight, spec.lambda);
    let t = [0.25, 0.125, 0.0625, 0.03125];
    let a = run_sweep(&spec, &functions, &t).unwrap();
    let b = run_sweep(&spec, &functions, &t).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), functions.len());
}

#[test]
fn weighted_branch_at_lambda_zero_shares_the_theorem1_numerator() {
    for name in ["square", "abs_beta_1.0", "smooth_step"] {
        let spec = quick(1.0, 0.0);
        let f = corpus_function(name, &spec.weight, 0.0).unwrap();
        let one = check_theorem1(&f, &spec).unwrap();
        let two = check_theorem2(&f, &spec, Branch::Weighted).unwrap();
        for (a, b) in one.rows.iter().zip(&two.rows) {
            assert!((a.numerator - b.numerator).abs() <= 1e-12 * a.numerator.max(1.0), "{name}");
        }
    }
}

#[test]
fn linear_members_give_zero_ratios() {
    let spec = quick(1.0, 0.5);
    for name in ["linear", "constant"] {
        let f = corpus_function(name, &spec.weight, 0.5).unwrap();
        let r = check_theorem1(&f, &spec).unwrap();
        assert!(r.pass && r.rows.iter().all(|row| row.value == 0.0));
        let r = check_lemma7(&f, &spec).unwrap();
        assert!(r.pass && r.rows.iter().all(|row| row.value == 0.0));
        assert!(check_direct(&f, &spec).unwrap().pass);
    }
}

#[test]
fn missing_inputs_are_reported() {
    let spec = quick(1.0, 0.0);
    let sq = corpus_function("square", &spec.weight, 0.0).unwrap();
    assert!(matches!(check_direct(&sq, &spec), Err(Error::MissingTarget(_))));
    let kink = corpus_function("abs_beta_1.0", &spec.weight, 0.0).unwrap();
    assert!(matches!(check_lemma7(&kink, &spec), Err(Error::MissingSecondDerivative(_))));
    let tiny = spec.clone().with_n_values(vec![4, 8, 64]);
    assert!(matches!(tiny.validate(), Err(Error::InvalidNodes { n: 4, min_n: 20, .. })));
    assert!(matches!(corpus_function::<f64>("nope", &spec.weight, 0.0), Err(Error::UnknownFunction(_))));
}

#[test]
fn single_precision_operator_tracks_double() {
    let w64 = Weight::new(0.5, 1.0).unwrap();
    let w32 = Weight32::new(0.5, 1.0).unwrap();
    for name in ["linear", "cubic", "abs_beta_1.0"] {
        let f64_op = build_surrogate(&corpus_function(name, &w64, 0.0).unwrap(), 256, &w64).unwrap();
        let f: Function32 = corpus_function(name, &w32, 0.0).unwrap();
        let f32_op: Coefficients32 = build_surrogate(&f, 256, &w32).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let a = f64_op.apply(x).unwrap();
            let b = f32_op.apply(x as f32).unwrap() as f64;
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{name} at {x}: {a} vs {b}");
        }
    }
}
