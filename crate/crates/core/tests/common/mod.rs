#![allow(dead_code)]

use std::f64::consts::PI;

use lasso_spectral::grid::GridFunction;
use lasso_spectral::quasi_ode::Tolerances;
use lasso_spectral::spectral_forward::LassoProblem;

pub const M: usize = 2;

/// `σ1(x) = 0.2 x (2 - x)` on `[0, 2]`.
pub fn standard_sigma1() -> GridFunction {
    GridFunction::from_fn(2.0, 801, |x| 0.2 * x * (2.0 - x)).unwrap()
}

/// `σ2(x) = 0.3 sin(2πx) + 0.1` on `[0, 1]`.
pub fn standard_sigma2() -> GridFunction {
    GridFunction::from_fn(1.0, 401, |x| 0.3 * (2.0 * PI * x).sin() + 0.1).unwrap()
}

/// Periodic, and `σ2'` has no reflection symmetry on the circle.
pub fn skewed_sigma2() -> GridFunction {
    GridFunction::from_fn(1.0, 401, |x| {
        0.3 * (2.0 * PI * x).sin() + 0.15 * (4.0 * PI * x).cos()
    })
    .unwrap()
}

/// `σ2(1) ≠ σ2(0)`.
pub fn nonperiodic_sigma2() -> GridFunction {
    GridFunction::from_fn(1.0, 401, |x| 0.3 * (2.0 * PI * x).sin() + 0.2 * x * x).unwrap()
}

pub fn tight() -> Tolerances {
    Tolerances::uniform(1e-12)
}

pub fn standard_problem() -> LassoProblem {
    LassoProblem::new(M, standard_sigma1(), standard_sigma2())
        .unwrap()
        .with_tolerances(tight())
}

pub fn zero_problem(m: usize) -> LassoProblem {
    LassoProblem::new(
        m,
        GridFunction::zeros(m as f64, 2 * m + 1).unwrap(),
        GridFunction::zeros(1.0, 3).unwrap(),
    )
    .unwrap()
}

/// Composite Simpson rule on an odd number of equally spaced samples.
pub fn simpson(values: &[f64], length: f64) -> f64 {
    assert!(values.len() % 2 == 1 && values.len() >= 3);
    let h = length / (values.len() - 1) as f64;
    let mut acc = values[0] + values[values.len() - 1];
    for (i, v) in values.iter().enumerate().take(values.len() - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}
