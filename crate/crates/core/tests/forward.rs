mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use lasso_spectral::error::LassoError;
use lasso_spectral::grid::GridFunction;
use lasso_spectral::harness::{run_forward, ExperimentConfig};
use lasso_spectral::quasi_ode::{integrate_fundamental, Tolerances};
use lasso_spectral::spectral_forward::{
    asymptotic_positions, delta, delta0, enumerate_eigenvalues, solve_alpha, LassoProblem,
};

use common::{standard_problem, tight, zero_problem};

/// Classical RK4 on `y' = σy + z`, `z' = -σz - (σ² + λ)y` with a fixed step.
fn rk4(sigma: impl Fn(f64) -> f64, l: f64, lambda: f64, y0: [f64; 2], steps: usize) -> [f64; 2] {
    let f = |x: f64, y: [f64; 2]| {
        let s = sigma(x);
        [s * y[0] + y[1], -s * y[1] - (s * s + lambda) * y[0]]
    };
    let h = l / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = f(x, y);
        let k2 = f(
            x + h / 2.0,
            [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]],
        );
        let k3 = f(
            x + h / 2.0,
            [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]],
        );
        let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

fn rk4_richardson(sigma: impl Fn(f64) -> f64 + Copy, lambda: f64, y0: [f64; 2]) -> [f64; 2] {
    let a = rk4(sigma, 1.0, lambda, y0, 2000);
    let b = rk4(sigma, 1.0, lambda, y0, 4000);
    [(16.0 * b[0] - a[0]) / 15.0, (16.0 * b[1] - a[1]) / 15.0]
}

#[test]
fn adaptive_integrator_matches_rk4() {
    let sigma = GridFunction::new(1.0, vec![0.0, 1.0]).unwrap();
    let e = integrate_fundamental(&sigma, 4.0, &tight()).unwrap();
    let c = rk4_richardson(|x| x, 4.0, [1.0, 0.0]);
    let s = rk4_richardson(|x| x, 4.0, [0.0, 1.0]);
    for (got, want) in [(e.c, c[0]), (e.c1, c[1]), (e.s, s[0]), (e.s1, s[1])] {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn zero_potential_characteristic_function_is_closed_form() {
    for m in [1usize, 2, 5] {
        let p = zero_problem(m).with_tolerances(tight());
        for i in 0..=50 {
            let lambda = 10.0 * i as f64;
            let got = delta(&p, lambda).unwrap();
            let want = delta0(m, lambda);
            assert!(
                (got - want).abs() < 1e-9,
                "m = {m}, λ = {lambda}: {got} vs {want}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn delta_agrees_with_delta0_on_random_points(m in 1usize..=5, lambda in -50.0f64..500.0) {
        let p = zero_problem(m).with_tolerances(tight());
        let got = delta(&p, lambda).unwrap();
        let want = delta0(m, lambda);
        let scale = want.abs().max(1.0);
        prop_assert!((got - want).abs() < 1e-9 * scale, "{} vs {}", got, want);
    }
}

#[test]
fn eigenvalues_are_roots_and_cover_every_label() {
    let p = standard_problem();
    let eigs = enumerate_eigenvalues(&p, 8, 16).unwrap();
    let alphas = solve_alpha(2).unwrap();
    for e in &eigs {
        let d = delta(&p, e.lambda).unwrap();
        assert!(d.abs() < 1e-9, "Δ({}) = {d}", e.lambda);
    }
    let rho_req = (2.0 * PI * 8.0 + alphas[1]).max(16.0 * PI);
    let expected = asymptotic_positions(&alphas, rho_req * (1.0 + 1e-12));
    assert_eq!(eigs.len(), expected.len());
    for (idx, _) in &expected {
        assert!(eigs.iter().any(|e| e.index == *idx), "missing {idx:?}");
    }
    let mut sorted: Vec<f64> = eigs.iter().map(|e| e.lambda).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(sorted.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn eigenvalue_count_in_windows_matches_asymptotics() {
    let p = standard_problem();
    let eigs = enumerate_eigenvalues(&p, 10, 20).unwrap();
    let alphas = solve_alpha(2).unwrap();
    // windows between consecutive branch-0 asymptotes, well inside the range
    for n in 2..20 {
        let lo = (PI * (n as f64 + 0.5)).powi(2);
        let hi = (PI * (n as f64 + 1.5)).powi(2);
        let found = eigs
            .iter()
            .filter(|e| e.lambda > lo && e.lambda <= hi)
            .count();
        let expected = asymptotic_positions(&alphas, 80.0)
            .iter()
            .filter(|(_, r)| r * r > lo && r * r <= hi)
            .count();
        assert_eq!(found, expected, "window {n}");
    }
}

#[test]
fn forward_artifacts_are_deterministic() {
    let cfg = ExperimentConfig::from_toml(
        r#"
m = 2
n = 6
[sigma1]
preset = "polynomial"
coefficients = [0.0, 0.4, -0.2]
[sigma2]
preset = "sine"
amplitude = 0.3
offset = 0.1
"#,
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_forward(&cfg, a.path()).unwrap();
    run_forward(&cfg, b.path()).unwrap();
    for name in [
        "eigenvalues.csv",
        "subspectrum.csv",
        "omegas.json",
        "alpha.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let alpha = std::fs::read_to_string(a.path().join("alpha.csv")).unwrap();
    assert_eq!(alpha.lines().count(), 3);
    let sub = std::fs::read_to_string(a.path().join("subspectrum.csv")).unwrap();
    assert_eq!(sub.lines().count(), 1 + 13 + 12);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let s1 = GridFunction::zeros(3.0, 4).unwrap();
    let s2 = GridFunction::zeros(1.0, 4).unwrap();
    assert!(matches!(
        LassoProblem::new(2, s1, s2),
        Err(LassoError::InvalidInput(_))
    ));
    let err = ExperimentConfig::from_toml("m = 2\nn = 3\n[sigma1]\npreset = \"zero\"\n");
    assert!(matches!(err, Err(LassoError::Config(_))));
    let tol = Tolerances::default();
    let s = GridFunction::zeros(1.0, 3).unwrap();
    assert!(integrate_fundamental(&s, f64::NAN, &tol).is_err());
}
