mod common;

use proptest::prelude::*;

use lasso_spectral::harness::{run_roundtrip, ExperimentConfig};
use lasso_spectral::partial_inverse::{
    assemble_moment_system, gram_condition, solve_moment_problem,
};
use lasso_spectral::periodic_inverse::{loop_dirichlet_spectrum, LoopForward};
use lasso_spectral::quasi_ode::integrate_fundamental;
use lasso_spectral::spectral_forward::{
    delta, enumerate_eigenvalues, extract_subspectrum, solve_alpha, LassoProblem, Truncation,
};

use common::{skewed_sigma2, standard_problem, standard_sigma1, standard_sigma2, tight};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `ρΔ(λ) = a ρh(λ) + b d(λ)/2` with `a = S1^[1](m)`, `b = 2ρ S1(m)`.
    #[test]
    fn moment_row_identity(lambda in 1.0f64..2000.0) {
        let p = standard_problem();
        let e1 = integrate_fundamental(p.sigma1(), lambda, &tight()).unwrap();
        let fwd = LoopForward::new(standard_sigma2(), tight()).unwrap();
        let rho = lambda.sqrt();
        let (a, b) = (e1.s1, 2.0 * rho * e1.s);
        let lhs = rho * delta(&p, lambda).unwrap();
        let rhs = a * rho * fwd.h(lambda).unwrap() + 0.5 * b * fwd.d(lambda).unwrap();
        let scale = (a.abs() + b.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() < 1e-8 * scale, "{} vs {}", lhs, rhs);
    }
}

#[test]
fn solution_satisfies_every_row() {
    let p = standard_problem();
    let eigs = enumerate_eigenvalues(&p, 12, 24).unwrap();
    let alphas = solve_alpha(2).unwrap();
    let sub = extract_subspectrum(&eigs, &alphas, 1, Truncation { n: 12, n0: 24 }).unwrap();
    let sys = assemble_moment_system(&standard_sigma1(), &sub).unwrap();
    let sol = solve_moment_problem(&sys).unwrap();
    for r in &sys.rows {
        let lambda = r.rho * r.rho;
        // the reconstructed h, d make Δ vanish at every eigenvalue in the data
        let res = r.a * r.rho * sol.h(lambda) + 0.5 * r.b * sol.d(lambda);
        let scale = r.a.abs() + r.b.abs();
        assert!(res.abs() < 1e-8 * scale, "{:?}: {res}", r.index);
    }
    // and approximate the true ones at the loop eigenvalues
    let fwd = LoopForward::new(standard_sigma2(), tight()).unwrap();
    for nu in loop_dirichlet_spectrum(&standard_sigma2(), 8).unwrap() {
        assert!((sol.h(nu) - fwd.h(nu).unwrap()).abs() < 1e-3);
        assert!((sol.d(nu) - fwd.d(nu).unwrap()).abs() < 1e-2);
    }
}

#[test]
fn gram_matrix_is_positive_definite_up_to_forty() {
    let p = standard_problem();
    let eigs = enumerate_eigenvalues(&p, 40, 40).unwrap();
    let alphas = solve_alpha(2).unwrap();
    let full = extract_subspectrum(&eigs, &alphas, 2, Truncation { n: 40, n0: 40 }).unwrap();
    let mut conds = Vec::new();
    for n in [5usize, 10, 20, 40] {
        let sub = full.truncate(Truncation { n, n0: n }).unwrap();
        let sys = assemble_moment_system(&standard_sigma1(), &sub).unwrap();
        assert!(sys.gram.clone().cholesky().is_some(), "N = {n}");
        conds.push(gram_condition(&sys).unwrap());
    }
    assert!(conds.iter().all(|c| *c < 1e3), "{conds:?}");
}

#[test]
fn different_loop_potentials_give_different_subspectra() {
    let alphas = solve_alpha(2).unwrap();
    let bounds = Truncation { n: 6, n0: 12 };
    let subs: Vec<_> = [standard_sigma2(), skewed_sigma2()]
        .into_iter()
        .map(|s2| {
            let p = LassoProblem::new(2, standard_sigma1(), s2)
                .unwrap()
                .with_tolerances(tight());
            let eigs = enumerate_eigenvalues(&p, 6, 12).unwrap();
            extract_subspectrum(&eigs, &alphas, 1, bounds).unwrap()
        })
        .collect();
    let gap = subs[0]
        .lambdas()
        .zip(subs[1].lambdas())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap > 1e-6, "max difference {gap}");
}

#[test]
fn roundtrip_report_is_deterministic() {
    let cfg = ExperimentConfig::from_path(
        &std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/standard.toml"),
    )
    .unwrap()
    .with_overrides(Some(10), None, None)
    .unwrap();
    let a = run_roundtrip(&cfg, None).unwrap().without_timings();
    let b = run_roundtrip(&cfg, None).unwrap().without_timings();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a.l2_error < 1e-2, "{}", a.l2_error);
}
