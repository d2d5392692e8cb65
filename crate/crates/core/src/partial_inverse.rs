//! Recovery of the loop potential from the boundary-edge potential and a
//! subspectrum.
//!
//! Writing `h(λ) = sin ρ/ρ + (1/ρ) ∫ K(t) sin ρt dt` and
//! `d(λ) = 2 cos ρ - 2 + 2 ∫ N(t) cos ρt dt`, the equation `Δ(λ_{nj}) = 0`
//! becomes the moment condition `((K, N), v_{nj}) = f_{nj}` in
//! `L2(0,1) ⊕ L2(0,1)` with
//!
//! ```text
//! v_{nj}(t) = (a_{nj} sin ρ_{nj} t, b_{nj} cos ρ_{nj} t),
//! a_{nj} = S1^[1](m, λ_{nj}),  b_{nj} = 2 ρ_{nj} S1(m, λ_{nj}),
//! f_{nj} = -a_{nj} sin ρ_{nj} - b_{nj} (cos ρ_{nj} - 1).
//! ```
//!
//! The truncated problem is solved in the span of the `v_{nj}` through the
//! Gram matrix; `h` and `d` then feed the periodic reconstruction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Assumption, LassoError, Result, StageExt};
use crate::grid::GridFunction;
use crate::periodic_inverse::{algorithm1_with, Algorithm1Options, PeriodicSpectralData};
use crate::quasi_ode::{integrate_fundamental, Tolerances};
use crate::spectral_forward::{EigenIndex, SignSequence, Subspectrum, Truncation};
use crate::trig::{
    composite_gauss, cos_cos, cos_rho, piecewise_linear_gauss, piecewise_linear_sin_cos,
    sin_over_rho, sin_sin,
};

/// Gram condition numbers at or above this are rejected.
pub const GRAM_CONDITION_LIMIT: f64 = 1e8;
/// Relative residual `‖G c - f‖ / ‖f‖` above this is a failed solve.
pub const RESIDUAL_LIMIT: f64 = 1e-6;
/// Nodes of the `K`, `N` output grids.
pub const OUTPUT_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub index: EigenIndex,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub f: f64,
}

impl MomentRow {
    pub fn recomputed_f(&self) -> f64 {
        -self.a * self.rho.sin() - self.b * (self.rho.cos() - 1.0)
    }
}

/// `H`-inner product of `(a1 sin p t, b1 cos p t)` and `(a2 sin q t, b2 cos q t)`.
fn pair_inner(a1: f64, b1: f64, p: f64, a2: f64, b2: f64, q: f64) -> f64 {
    a1 * a2 * sin_sin(p, q) + b1 * b2 * cos_cos(p, q)
}

#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub rows: Vec<MomentRow>,
    pub gram: DMatrix<f64>,
    pub bounds: Truncation,
}

impl MomentSystem {
    /// Builds the Gram matrix from given rows.
    pub fn from_rows(rows: Vec<MomentRow>, bounds: Truncation) -> Result<Self> {
        if rows.is_empty() {
            return Err(LassoError::InvalidInput("moment system has no rows".into()));
        }
        let n = rows.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (r, s) = (&rows[i], &rows[j]);
                let g = pair_inner(r.a, r.b, r.rho, s.a, s.b, s.rho);
                gram[(i, j)] = g;
                gram[(j, i)] = g;
            }
        }
        Ok(Self { rows, gram, bounds })
    }

    pub fn f(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.f))
    }
}

pub fn assemble_moment_system(sigma1: &GridFunction, sub: &Subspectrum) -> Result<MomentSystem> {
    assemble_moment_system_with(sigma1, sub, &Tolerances::uniform(1e-12))
}

pub fn assemble_moment_system_with(
    sigma1: &GridFunction,
    sub: &Subspectrum,
    tol: &Tolerances,
) -> Result<MomentSystem> {
    if (sigma1.length() - sub.m as f64).abs() > 1e-12 * sub.m as f64 {
        return Err(LassoError::InvalidInput(format!(
            "sigma1 length {} does not match m = {}",
            sigma1.length(),
            sub.m
        )));
    }
    if let Some(e) = sub.entries.iter().find(|e| !(e.lambda > 0.0)) {
        return Err(LassoError::AssumptionViolation {
            assumption: Assumption::A2,
            detail: format!(
                "eigenvalue ({}, {}) = {} is not positive",
                e.index.n, e.index.j, e.lambda
            ),
        });
    }
    let mut sorted: Vec<_> = sub.entries.iter().collect();
    sorted.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    for w in sorted.windows(2) {
        if w[1].lambda - w[0].lambda <= 1e-8 * (1.0 + w[1].lambda.abs()) {
            return Err(LassoError::AssumptionViolation {
                assumption: Assumption::A1,
                detail: format!(
                    "eigenvalues ({}, {}) and ({}, {}) coincide at {}",
                    w[0].index.n, w[0].index.j, w[1].index.n, w[1].index.j, w[1].lambda
                ),
            });
        }
    }
    let rows: Vec<MomentRow> = sub
        .entries
        .par_iter()
        .map(|e| {
            let end =
                integrate_fundamental(sigma1, e.lambda, tol).map_err(|err| LassoError::Stage {
                    stage: "boundary-edge integration",
                    source: Box::new(LassoError::InvalidInput(format!(
                        "index ({}, {}): {err}",
                        e.index.n, e.index.j
                    ))),
                })?;
            let rho = e.lambda.sqrt();
            let a = end.s1;
            let b = 2.0 * rho * end.s;
            let f = -a * rho.sin() - b * (rho.cos() - 1.0);
            Ok(MomentRow {
                index: e.index,
                a,
                b,
                rho,
                f,
            })
        })
        .collect::<Result<_>>()?;
    MomentSystem::from_rows(rows, sub.bounds)
}

/// Rows `(a, b, ρ)` of the zero-potential system for branch `k` and branch 0,
/// in the same order as [`Subspectrum::entries`]. With `ρ = |2πn + α_k|`
/// the cosine coefficient is `2 sin(ρ m) = 2 sin(α_k m) sign(2πn + α_k)`;
/// branch-0 rows carry `a = cos(πnm) = (-1)^{nm}`.
pub fn build_v0_basis(
    k: usize,
    alpha_k: f64,
    m: usize,
    bounds: Truncation,
) -> Result<Vec<MomentRow>> {
    if k == 0 || k > m {
        return Err(LassoError::InvalidInput(format!(
            "branch k must lie in 1..={m}, got {k}"
        )));
    }
    let am = alpha_k * m as f64;
    let (ca, sa) = (am.cos(), am.sin());
    if ca.abs() <= 1e-10 || sa.abs() <= 1e-10 {
        return Err(LassoError::DegenerateSystem(format!(
            "α_k m = {am} makes cos or sin vanish"
        )));
    }
    let mut rows = Vec::new();
    let nb = bounds.n as i64;
    for n in -nb..=nb {
        let signed = 2.0 * PI * n as f64 + alpha_k;
        rows.push(MomentRow {
            index: EigenIndex { n, j: k },
            a: ca,
            b: 2.0 * sa * signed.signum(),
            rho: signed.abs(),
            f: 0.0,
        });
    }
    for n in 1..=bounds.n0 as i64 {
        rows.push(MomentRow {
            index: EigenIndex { n, j: 0 },
            a: if (n as usize * m).is_multiple_of(2) { 1.0 } else { -1.0 },
            b: 0.0,
            rho: PI * n as f64,
            f: 0.0,
        });
    }
    Ok(rows)
}

/// `‖v_{nj} - v⁰_{nj}‖²` for each row, matched by index.
pub fn v0_distances(system: &MomentSystem, v0: &[MomentRow]) -> Result<Vec<f64>> {
    system
        .rows
        .iter()
        .map(|r| {
            let z = v0.iter().find(|z| z.index == r.index).ok_or(
                LassoError::IncompleteSubspectrum {
                    n: r.index.n,
                    j: r.index.j,
                },
            )?;
            let vv = pair_inner(r.a, r.b, r.rho, r.a, r.b, r.rho);
            let zz = pair_inner(z.a, z.b, z.rho, z.a, z.b, z.rho);
            let vz = pair_inner(r.a, r.b, r.rho, z.a, z.b, z.rho);
            Ok((vv + zz - 2.0 * vz).max(0.0))
        })
        .collect()
}

/// Cumulative sums of [`v0_distances`] over rows ordered by reference
/// frequency.
pub fn v0_partial_sums(system: &MomentSystem, v0: &[MomentRow]) -> Result<Vec<(f64, f64)>> {
    let dist = v0_distances(system, v0)?;
    let mut pairs: Vec<(f64, f64)> = system
        .rows
        .iter()
        .zip(dist)
        .map(|(r, d)| {
            let z = v0
                .iter()
                .find(|z| z.index == r.index)
                .expect("checked above");
            (z.rho, d)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    Ok(pairs
        .into_iter()
        .map(|(rho, d)| {
            acc += d;
            (rho, acc)
        })
        .collect())
}

/// 2-norm condition number of the Gram matrix.
pub fn gram_condition(system: &MomentSystem) -> Result<f64> {
    let eig = system.gram.clone().symmetric_eigen();
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-15 * max {
        return Err(LassoError::DegenerateSystem(format!(
            "Gram matrix is numerically singular (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    Ok(max / min)
}

/// `(K, N)` in the span of the truncated system, kept as coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSolution {
    pub rows: Vec<MomentRow>,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub gram_condition: f64,
}

impl MomentSolution {
    pub fn k_at(&self, t: f64) -> f64 {
        self.rows
            .iter()
            .zip(&self.coefficients)
            .map(|(r, c)| c * r.a * (r.rho * t).sin())
            .sum()
    }

    pub fn n_at(&self, t: f64) -> f64 {
        self.rows
            .iter()
            .zip(&self.coefficients)
            .map(|(r, c)| c * r.b * (r.rho * t).cos())
            .sum()
    }

    pub fn k_grid(&self, nodes: usize) -> Result<GridFunction> {
        GridFunction::from_fn(1.0, nodes, |t| self.k_at(t))
    }

    pub fn n_grid(&self, nodes: usize) -> Result<GridFunction> {
        GridFunction::from_fn(1.0, nodes, |t| self.n_at(t))
    }

    /// `h(λ)`, integrating the series in closed form for `λ > 1` and by
    /// Gauss–Legendre otherwise.
    pub fn h(&self, lambda: f64) -> f64 {
        if lambda > 1.0 {
            let rho = lambda.sqrt();
            let inner: f64 = self
                .rows
                .iter()
                .zip(&self.coefficients)
                .map(|(r, c)| c * r.a * sin_sin(r.rho, rho))
                .sum();
            (rho.sin() + inner) / rho
        } else {
            sin_over_rho(lambda, 1.0)
                + composite_gauss(
                    |t| self.k_at(t) * sin_over_rho(lambda, t),
                    1.0,
                    self.panels(),
                )
        }
    }

    pub fn d(&self, lambda: f64) -> f64 {
        if lambda > 1.0 {
            let rho = lambda.sqrt();
            let inner: f64 = self
                .rows
                .iter()
                .zip(&self.coefficients)
                .map(|(r, c)| c * r.b * cos_cos(r.rho, rho))
                .sum();
            2.0 * rho.cos() - 2.0 + 2.0 * inner
        } else {
            2.0 * cos_rho(lambda, 1.0) - 2.0
                + 2.0 * composite_gauss(|t| self.n_at(t) * cos_rho(lambda, t), 1.0, self.panels())
        }
    }

    fn panels(&self) -> usize {
        let rho_max = self.rows.iter().fold(0.0f64, |a, r| a.max(r.rho));
        ((rho_max / 2.0).ceil() as usize).max(16)
    }
}

/// Solves `G c = f` by Cholesky and checks the residual.
pub fn solve_moment_problem(system: &MomentSystem) -> Result<MomentSolution> {
    let condition = gram_condition(system)?;
    if condition >= GRAM_CONDITION_LIMIT {
        return Err(LassoError::IllConditioned {
            condition,
            limit: GRAM_CONDITION_LIMIT,
        });
    }
    let f = system.f();
    let chol = system.gram.clone().cholesky().ok_or_else(|| {
        LassoError::DegenerateSystem("Gram matrix is not positive definite".into())
    })?;
    let c = chol.solve(&f);
    let residual_norm = (&system.gram * &c - &f).norm();
    let limit = RESIDUAL_LIMIT * f.norm();
    if residual_norm > limit && residual_norm > 0.0 {
        return Err(LassoError::NonConvergence {
            residual: residual_norm,
            limit,
        });
    }
    Ok(MomentSolution {
        rows: system.rows.clone(),
        coefficients: c.iter().copied().collect(),
        residual_norm,
        gram_condition: condition,
    })
}

/// `h` and `d` from sampled `K`, `N`, integrating the piecewise-linear
/// interpolants exactly for `λ > 0`.
#[derive(Debug, Clone)]
pub struct GridHd {
    pub k: GridFunction,
    pub n: GridFunction,
}

impl GridHd {
    pub fn h(&self, lambda: f64) -> f64 {
        if lambda > 1e-8 {
            let rho = lambda.sqrt();
            let (s, _) = piecewise_linear_sin_cos(self.k.values(), 1.0, rho);
            (rho.sin() + s) / rho
        } else {
            sin_over_rho(lambda, 1.0)
                + piecewise_linear_gauss(self.k.values(), 1.0, |t| sin_over_rho(lambda, t))
        }
    }

    pub fn d(&self, lambda: f64) -> f64 {
        if lambda > 1e-8 {
            let rho = lambda.sqrt();
            let (_, c) = piecewise_linear_sin_cos(self.n.values(), 1.0, rho);
            2.0 * rho.cos() - 2.0 + 2.0 * c
        } else {
            2.0 * cos_rho(lambda, 1.0) - 2.0
                + 2.0 * piecewise_linear_gauss(self.n.values(), 1.0, |t| cos_rho(lambda, t))
        }
    }
}

pub fn reconstruct_h_d(k: &GridFunction, n: &GridFunction) -> Result<GridHd> {
    for (name, g) in [("K", k), ("N", n)] {
        if (g.length() - 1.0).abs() > 1e-12 {
            return Err(LassoError::InvalidInput(format!(
                "{name} must live on [0, 1], got length {}",
                g.length()
            )));
        }
    }
    Ok(GridHd {
        k: k.clone(),
        n: n.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub k: GridFunction,
    pub n: GridFunction,
    pub solution: MomentSolution,
    pub residual_norm: f64,
}

impl ReconstructionResult {
    pub fn h(&self, lambda: f64) -> f64 {
        self.solution.h(lambda)
    }

    pub fn d(&self, lambda: f64) -> f64 {
        self.solution.d(lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm2Options {
    pub tol: Tolerances,
    pub periodic: Algorithm1Options,
    pub output_nodes: usize,
}

impl Default for Algorithm2Options {
    fn default() -> Self {
        Self {
            tol: Tolerances::uniform(1e-12),
            periodic: Algorithm1Options {
                radicand_tol: 1e-2,
                common_zero_tol: 1e-8,
                ..Algorithm1Options::default()
            },
            output_nodes: OUTPUT_NODES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Algorithm2Output {
    pub sigma2: GridFunction,
    pub reconstruction: ReconstructionResult,
    pub periodic: PeriodicSpectralData,
    pub gl_condition: f64,
}

/// Report written after a reconstruction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    pub residual_norm: f64,
    pub gram_condition: f64,
    pub recovered_sigma2: Vec<f64>,
}

impl From<&Algorithm2Output> for ReconstructionReport {
    fn from(o: &Algorithm2Output) -> Self {
        Self {
            k: o.reconstruction.k.values().to_vec(),
            n: o.reconstruction.n.values().to_vec(),
            residual_norm: o.reconstruction.residual_norm,
            gram_condition: o.reconstruction.solution.gram_condition,
            recovered_sigma2: o.sigma2.values().to_vec(),
        }
    }
}

/// Moment problem for `h`, `d`, without the final periodic step.
pub fn reconstruct_from_subspectrum(
    sigma1: &GridFunction,
    sub: &Subspectrum,
    opts: &Algorithm2Options,
) -> Result<ReconstructionResult> {
    let system = assemble_moment_system_with(sigma1, sub, &opts.tol).stage("moment assembly")?;
    let solution = solve_moment_problem(&system).stage("moment solve")?;
    let k = solution.k_grid(opts.output_nodes)?;
    let n = solution.n_grid(opts.output_nodes)?;
    Ok(ReconstructionResult {
        k,
        n,
        residual_norm: solution.residual_norm,
        solution,
    })
}

/// `σ2` from `σ1`, the subspectrum and the signs; the number of loop
/// eigenvalues used equals `omegas.len()`.
pub fn algorithm2(
    sigma1: &GridFunction,
    sub: &Subspectrum,
    omegas: &SignSequence,
) -> Result<GridFunction> {
    Ok(algorithm2_with(sigma1, sub, omegas, &Algorithm2Options::default())?.sigma2)
}

pub fn algorithm2_with(
    sigma1: &GridFunction,
    sub: &Subspectrum,
    omegas: &SignSequence,
    opts: &Algorithm2Options,
) -> Result<Algorithm2Output> {
    if omegas.is_empty() {
        return Err(LassoError::InvalidInput("sign sequence is empty".into()));
    }
    let reconstruction = reconstruct_from_subspectrum(sigma1, sub, opts)?;
    let sol = &reconstruction.solution;
    let (sigma2, periodic, gl_condition) = algorithm1_with(
        &|l: f64| Ok(sol.h(l)),
        &|l: f64| Ok(sol.d(l)),
        omegas,
        omegas.len(),
        &opts.periodic,
    )
    .stage("periodic reconstruction")?;
    Ok(Algorithm2Output {
        sigma2,
        reconstruction,
        periodic,
        gl_condition,
    })
}
