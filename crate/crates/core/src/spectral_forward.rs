//! Forward spectral problem on the lasso graph.
//!
//! The boundary edge `e1 = [0, m]` carries a Dirichlet condition at `x = 0`
//! and is glued at `x = m` to both ends of the unit loop `e2` with continuity
//! and Kirchhoff conditions on quasi-derivatives. Eigenvalues are the zeros of
//!
//! ```text
//! Δ(λ) = S1^[1](m, λ) S2(1, λ) + S1(m, λ) (S2^[1](1, λ) + C2(1, λ) - 2)
//! ```
//!
//! For zero potentials they are `(2πn + α_k)²`, `n ∈ Z`, `k = 1..m`, and
//! `(πn)²`, `n ≥ 1`, where `α_k` are the roots of `tan(ρ m) = -sin ρ / (2 cos ρ - 2)`
//! on `(0, π)`. The same asymptotic positions are used to number the spectrum
//! of a perturbed problem.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Assumption, LassoError, Result};
use crate::grid::GridFunction;
use crate::quasi_ode::{integrate_fundamental, Tolerances};
use crate::roots::{brent, brent_with_values};
use crate::trig::{cos_rho, sin_over_rho};

/// Potentials on the boundary edge `[0, m]` and on the unit loop.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    m: usize,
    sigma1: GridFunction,
    sigma2: GridFunction,
    tol: Tolerances,
}

impl LassoProblem {
    pub fn new(m: usize, sigma1: GridFunction, sigma2: GridFunction) -> Result<Self> {
        if m == 0 {
            return Err(LassoError::InvalidInput(
                "boundary edge length m must be a positive integer".into(),
            ));
        }
        if (sigma1.length() - m as f64).abs() > 1e-12 * m as f64 {
            return Err(LassoError::InvalidInput(format!(
                "sigma1 must live on [0, {m}], got length {}",
                sigma1.length()
            )));
        }
        if (sigma2.length() - 1.0).abs() > 1e-12 {
            return Err(LassoError::InvalidInput(format!(
                "sigma2 must live on [0, 1], got length {}",
                sigma2.length()
            )));
        }
        Ok(Self {
            m,
            sigma1,
            sigma2,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma1(&self) -> &GridFunction {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &GridFunction {
        &self.sigma2
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Rigorous lower bound of the spectrum: the quadratic form is
    /// `Σ ∫ (y^[1])² - σ² y²`, so `λ >= -max |σ|²`.
    pub fn spectral_lower_bound(&self) -> f64 {
        let s = self.sigma1.sup_norm().max(self.sigma2.sup_norm());
        -s * s
    }
}

pub fn delta(problem: &LassoProblem, lambda: f64) -> Result<f64> {
    let e1 = integrate_fundamental(&problem.sigma1, lambda, &problem.tol)?;
    let e2 = integrate_fundamental(&problem.sigma2, lambda, &problem.tol)?;
    Ok(e1.s1 * e2.s + e1.s * (e2.s1 + e2.c - 2.0))
}

/// Closed-form characteristic function for zero potentials.
pub fn delta0(m: usize, lambda: f64) -> f64 {
    let m = m as f64;
    cos_rho(lambda, m) * sin_over_rho(lambda, 1.0)
        + sin_over_rho(lambda, m) * (2.0 * cos_rho(lambda, 1.0) - 2.0)
}

/// `D(ρ) = ρ Δ0(ρ²) = cos(ρm) sin ρ + sin(ρm)(2 cos ρ - 2)`; odd and
/// 2π-periodic.
pub fn char_d(m: usize, rho: f64) -> f64 {
    let m = m as f64;
    (rho * m).cos() * rho.sin() + (rho * m).sin() * (2.0 * rho.cos() - 2.0)
}

/// Open interval `((k-1)π/m, (k-½)π/m)` containing `α_k`.
pub fn alpha_bracket(m: usize, k: usize) -> (f64, f64) {
    let m = m as f64;
    let k = k as f64;
    ((k - 1.0) * PI / m, (k - 0.5) * PI / m)
}

/// The `m` roots `α_1 < … < α_m` of `D` on `(0, π)`.
///
/// On `(0, π)`, `D(ρ) = sin ρ · P(ρ)` with
/// `P(ρ) = cos(ρm) - 2 tan(ρ/2) sin(ρm)`, and `P` changes sign on every
/// bracket from [`alpha_bracket`], so the roots are found on `P`.
pub fn solve_alpha(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(LassoError::InvalidInput("m must be at least 1".into()));
    }
    let mf = m as f64;
    let p = |rho: f64| (rho * mf).cos() - 2.0 * (0.5 * rho).tan() * (rho * mf).sin();
    (1..=m)
        .map(|k| {
            let (lo, hi) = alpha_bracket(m, k);
            brent(
                |r| Ok(p(r)),
                lo,
                hi,
                1e-15,
                &format!("tan-equation on branch {k}"),
            )
        })
        .collect()
}

/// Label `(n, j)` of an eigenvalue: `j = 0` is the loop-aligned branch with
/// asymptote `πn`, `n >= 1`; `j = 1..m` has asymptote `|2πn + α_j|`, `n ∈ Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EigenIndex {
    pub n: i64,
    pub j: usize,
}

impl EigenIndex {
    pub fn new(n: i64, j: usize) -> Result<Self> {
        if j == 0 && n < 1 {
            return Err(LassoError::InvalidInput(format!(
                "branch-0 index needs n >= 1, got {n}"
            )));
        }
        Ok(Self { n, j })
    }

    /// Asymptotic value of `sqrt(λ)` for this index.
    pub fn asymptote(&self, alphas: &[f64]) -> f64 {
        if self.j == 0 {
            PI * self.n as f64
        } else {
            (2.0 * PI * self.n as f64 + alphas[self.j - 1]).abs()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub index: EigenIndex,
    pub lambda: f64,
    /// `|Δ(λ)|` at the returned point.
    pub residual: f64,
}

impl Eigenvalue {
    /// `sqrt(λ)` for positive `λ`, `-sqrt(-λ)` otherwise.
    pub fn rho(&self) -> f64 {
        signed_sqrt(self.lambda)
    }
}

fn signed_sqrt(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        lambda.sqrt()
    } else {
        -(-lambda).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Sign-change samples inside each cell between consecutive asymptotic
    /// midpoints.
    pub samples_per_cell: usize,
    /// Samples covering `[λ_min, 0]`.
    pub negative_samples: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            samples_per_cell: 8,
            negative_samples: 32,
        }
    }
}

/// All asymptotic positions `(index, ρ)` with `ρ <= rho_max`, sorted by `ρ`
/// with ties broken toward the smaller branch.
pub fn asymptotic_positions(alphas: &[f64], rho_max: f64) -> Vec<(EigenIndex, f64)> {
    let m = alphas.len();
    let n_hi = (rho_max / (2.0 * PI)).ceil() as i64 + 2;
    let mut out = Vec::new();
    for j in 1..=m {
        for n in -n_hi..=n_hi {
            let idx = EigenIndex { n, j };
            let r = idx.asymptote(alphas);
            if r <= rho_max {
                out.push((idx, r));
            }
        }
    }
    let n0_hi = (rho_max / PI).floor() as i64;
    for n in 1..=n0_hi {
        out.push((EigenIndex { n, j: 0 }, PI * n as f64));
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.j.cmp(&b.0.j)));
    out
}

/// Eigenvalues whose asymptotic positions cover the branches `k = 1..m` for
/// `|n| <= n_bound` and branch 0 for `n <= n0_bound`.
pub fn enumerate_eigenvalues(
    problem: &LassoProblem,
    n_bound: usize,
    n0_bound: usize,
) -> Result<Vec<Eigenvalue>> {
    enumerate_eigenvalues_with(problem, n_bound, n0_bound, &EnumerationOptions::default())
}

pub fn enumerate_eigenvalues_with(
    problem: &LassoProblem,
    n_bound: usize,
    n0_bound: usize,
    opts: &EnumerationOptions,
) -> Result<Vec<Eigenvalue>> {
    if n_bound == 0 || n0_bound == 0 {
        return Err(LassoError::InvalidInput(
            "truncation bounds must be at least 1".into(),
        ));
    }
    let alphas = solve_alpha(problem.m)?;
    let alpha_max = alphas.iter().cloned().fold(0.0, f64::max);
    let rho_req = (2.0 * PI * n_bound as f64 + alpha_max).max(PI * n0_bound as f64);
    let all = asymptotic_positions(&alphas, rho_req + 2.0 * PI);
    let split = all.partition_point(|p| p.1 <= rho_req * (1.0 + 1e-12));
    let positions = &all[..split];
    let rho_top = 0.5 * (positions[split - 1].1 + all[split].1);

    // Cell boundaries at midpoints between consecutive asymptotes; the
    // negative-λ range is prepended to the first cell.
    let mut bounds = Vec::with_capacity(positions.len() + 1);
    bounds.push(0.0);
    for w in positions.windows(2) {
        bounds.push(0.5 * (w[0].1 + w[1].1));
    }
    bounds.push(rho_top);

    // Sample in s = signed sqrt(λ).
    let s_floor = -((-problem.spectral_lower_bound()).sqrt() + 0.5);
    let mut samples = Vec::new();
    let neg = opts.negative_samples.max(2);
    for i in 0..neg {
        samples.push(s_floor + (0.0 - s_floor) * i as f64 / neg as f64);
    }
    let per = opts.samples_per_cell.max(1);
    for w in bounds.windows(2) {
        for i in 0..per {
            samples.push(w[0] + (w[1] - w[0]) * i as f64 / per as f64);
        }
    }
    samples.push(rho_top);

    let delta_s = |s: f64| delta(problem, s * s.abs());
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&s| delta_s(s))
        .collect::<Result<_>>()?;

    let mut exact = Vec::new();
    let mut brackets = Vec::new();
    for i in 0..samples.len() - 1 {
        if values[i] == 0.0 {
            exact.push(samples[i]);
        } else if values[i] * values[i + 1] < 0.0 {
            brackets.push(i);
        }
    }
    let xtol_for = |s: f64| 1e-15 * s.abs().max(1.0);
    let mut roots: Vec<f64> = brackets
        .par_iter()
        .map(|&i| {
            let (a, b) = (samples[i], samples[i + 1]);
            brent_with_values(
                delta_s,
                a,
                values[i],
                b,
                values[i + 1],
                xtol_for(b),
                "characteristic function",
            )
        })
        .collect::<Result<_>>()?;
    roots.extend(exact);
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    if roots.len() != positions.len() {
        // locate the first cell whose root count is not one
        for (c, w) in bounds.windows(2).enumerate() {
            let lo = if c == 0 { f64::NEG_INFINITY } else { w[0] };
            let count = roots.iter().filter(|&&r| r > lo && r <= w[1]).count();
            if count != 1 {
                let lo_s = if c == 0 { s_floor } else { w[0] };
                return Err(LassoError::NumberingAmbiguity {
                    lo: lo_s * lo_s.abs(),
                    hi: w[1] * w[1],
                    found: count,
                    expected: 1,
                });
            }
        }
        return Err(LassoError::NumberingAmbiguity {
            lo: s_floor * s_floor.abs(),
            hi: rho_top * rho_top,
            found: roots.len(),
            expected: positions.len(),
        });
    }

    // Greedy: in increasing λ, take the nearest unclaimed asymptote; ties go
    // to the smaller branch because positions are sorted that way.
    let mut claimed = vec![false; positions.len()];
    let mut out = Vec::with_capacity(roots.len());
    for &s in &roots {
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, p)) in positions.iter().enumerate() {
            if claimed[i] {
                continue;
            }
            let dist = (s - p).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        let (i, _) = best.expect("counts match");
        claimed[i] = true;
        let lambda = s * s.abs();
        out.push(Eigenvalue {
            index: positions[i].0,
            lambda,
            residual: 0.0,
        });
    }
    out.par_iter_mut().try_for_each(|e| -> Result<()> {
        e.residual = delta(problem, e.lambda)?.abs();
        Ok(())
    })?;
    Ok(out)
}

/// Truncation of the index set `I = {(n, k): |n| <= n} ∪ {(n, 0): 1 <= n <= n0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n: usize,
    pub n0: usize,
}

/// The eigenvalues `λ_{nk}`, `|n| <= N`, and `λ_{n0}`, `n <= N0`, for one
/// fixed branch `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspectrum {
    pub m: usize,
    pub k: usize,
    pub alpha_k: f64,
    pub entries: Vec<Eigenvalue>,
    pub bounds: Truncation,
}

impl Subspectrum {
    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.lambda)
    }

    /// Copy with every eigenvalue moved by `c`.
    pub fn shifted(&self, c: f64) -> Subspectrum {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.lambda += c;
        }
        out
    }

    /// Restriction to a smaller truncation.
    pub fn truncate(&self, bounds: Truncation) -> Result<Subspectrum> {
        if bounds.n > self.bounds.n || bounds.n0 > self.bounds.n0 {
            return Err(LassoError::InvalidInput(format!(
                "cannot widen truncation ({}, {}) to ({}, {})",
                self.bounds.n, self.bounds.n0, bounds.n, bounds.n0
            )));
        }
        let entries = self
            .entries
            .iter()
            .filter(|e| in_index_set(&e.index, self.k, bounds))
            .copied()
            .collect();
        Ok(Subspectrum {
            entries,
            bounds,
            ..self.clone()
        })
    }
}

fn in_index_set(idx: &EigenIndex, k: usize, bounds: Truncation) -> bool {
    (idx.j == k && idx.n.unsigned_abs() as usize <= bounds.n)
        || (idx.j == 0 && idx.n >= 1 && idx.n as usize <= bounds.n0)
}

/// Picks branch `k` and branch 0 out of an enumerated spectrum. Entries are
/// ordered as `(−N, k) … (N, k)` followed by `(1, 0) … (N0, 0)`.
pub fn extract_subspectrum(
    eigs: &[Eigenvalue],
    alphas: &[f64],
    k: usize,
    bounds: Truncation,
) -> Result<Subspectrum> {
    let m = alphas.len();
    if k == 0 || k > m {
        return Err(LassoError::InvalidInput(format!(
            "branch k must lie in 1..={m}, got {k}"
        )));
    }
    let find = |n: i64, j: usize| {
        eigs.iter()
            .find(|e| e.index.n == n && e.index.j == j)
            .copied()
            .ok_or(LassoError::IncompleteSubspectrum { n, j })
    };
    let nb = bounds.n as i64;
    let mut entries = Vec::new();
    for n in -nb..=nb {
        entries.push(find(n, k)?);
    }
    for n in 1..=bounds.n0 as i64 {
        entries.push(find(n, 0)?);
    }
    Ok(Subspectrum {
        m,
        k,
        alpha_k: alphas[k - 1],
        entries,
        bounds,
    })
}

/// `sqrt(λ_{nj})` minus its asymptote, per entry.
pub fn asymptotic_residuals(sub: &Subspectrum) -> Result<Vec<f64>> {
    let mut alphas = vec![0.0; sub.m];
    alphas[sub.k - 1] = sub.alpha_k;
    sub.entries
        .iter()
        .map(|e| {
            if e.lambda <= 0.0 {
                Err(LassoError::AssumptionViolation {
                    assumption: Assumption::A2,
                    detail: format!(
                        "eigenvalue ({}, {}) = {} is not positive",
                        e.index.n, e.index.j, e.lambda
                    ),
                })
            } else {
                Ok(e.lambda.sqrt() - e.index.asymptote(&alphas))
            }
        })
        .collect()
}

/// Signs `ω_n = sign H(ν_n)`, `n = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignSequence(Vec<i8>);

impl SignSequence {
    pub fn new(omegas: Vec<i8>) -> Result<Self> {
        if let Some(i) = omegas.iter().position(|&w| w != 1 && w != -1) {
            return Err(LassoError::InvalidInput(format!(
                "sign at n = {} must be ±1, got {}",
                i + 1,
                omegas[i]
            )));
        }
        Ok(Self(omegas))
    }

    /// Signs of the given `H(ν_n)` values, taking the IEEE sign bit so that
    /// zeros still map to ±1. Where `H(ν_n)` vanishes the sign does not
    /// enter the reconstruction, because the radicand in `H = ω √(d(d+4))`
    /// vanishes too.
    pub fn from_values(values: &[f64]) -> Self {
        Self(
            values
                .iter()
                .map(|v| if v.is_sign_negative() { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `ω_n` for `n >= 1`.
    pub fn get(&self, n: usize) -> Option<i8> {
        n.checked_sub(1).and_then(|i| self.0.get(i)).copied()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// Copy with `ω_n` negated.
    pub fn flipped(&self, n: usize) -> SignSequence {
        let mut v = self.0.clone();
        v[n - 1] = -v[n - 1];
        SignSequence(v)
    }
}

impl TryFrom<Vec<i8>> for SignSequence {
    type Error = LassoError;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SignSequence::new(v)
    }
}

impl From<SignSequence> for Vec<i8> {
    fn from(s: SignSequence) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionTolerances {
    /// Eigenvalues closer than `distinct_rel * (1 + |λ|)` count as equal.
    pub distinct_rel: f64,
    /// `|d(ν_n)|` at or below this counts as a common zero of `h` and `d`.
    pub common_zero_abs: f64,
}

impl Default for AssumptionTolerances {
    fn default() -> Self {
        Self {
            distinct_rel: 1e-8,
            common_zero_abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub min_gap: f64,
    pub closest_pair: Option<(EigenIndex, EigenIndex)>,
    pub min_lambda: f64,
    pub min_abs_d: f64,
    pub max_abs_h: f64,
    /// `n` (1-based) with `|d(ν_n)|` below tolerance.
    pub common_zeros: Vec<usize>,
    pub d_at_nu: Vec<f64>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }

    /// First violated assumption as an error.
    pub fn ensure(&self) -> Result<()> {
        if !self.a1 {
            let detail = match self.closest_pair {
                Some((a, b)) => format!(
                    "eigenvalues ({}, {}) and ({}, {}) coincide (gap {:e})",
                    a.n, a.j, b.n, b.j, self.min_gap
                ),
                None => format!("minimum gap {:e}", self.min_gap),
            };
            return Err(LassoError::AssumptionViolation {
                assumption: Assumption::A1,
                detail,
            });
        }
        if !self.a2 {
            return Err(LassoError::AssumptionViolation {
                assumption: Assumption::A2,
                detail: format!("smallest eigenvalue {} is not positive", self.min_lambda),
            });
        }
        if !self.a3 {
            let list: Vec<String> = self
                .common_zeros
                .iter()
                .map(|n| format!("n = {n}: d(ν_n) = {:e}", self.d_at_nu[n - 1]))
                .collect();
            return Err(LassoError::AssumptionViolation {
                assumption: Assumption::A3,
                detail: format!("d(ν_n) = 0 at {}", list.join(", ")),
            });
        }
        Ok(())
    }
}

/// Checks distinctness and positivity of the subspectrum and the absence of
/// common zeros of `h` and `d` at the supplied zeros `nus` of `h`.
pub fn check_assumptions<H, D>(
    sub: &Subspectrum,
    h_at: H,
    d_at: D,
    nus: &[f64],
    tol: &AssumptionTolerances,
) -> Result<AssumptionReport>
where
    H: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let mut sorted: Vec<&Eigenvalue> = sub.entries.iter().collect();
    sorted.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    let mut min_gap = f64::INFINITY;
    let mut closest_pair = None;
    let mut a1 = true;
    for w in sorted.windows(2) {
        let gap = w[1].lambda - w[0].lambda;
        if gap < min_gap {
            min_gap = gap;
            closest_pair = Some((w[0].index, w[1].index));
        }
        if gap <= tol.distinct_rel * (1.0 + w[1].lambda.abs()) {
            a1 = false;
        }
    }
    let min_lambda = sorted.first().map_or(f64::INFINITY, |e| e.lambda);
    let a2 = min_lambda > 0.0;

    let mut d_at_nu = Vec::with_capacity(nus.len());
    let mut max_abs_h: f64 = 0.0;
    for &nu in nus {
        d_at_nu.push(d_at(nu)?);
        max_abs_h = max_abs_h.max(h_at(nu)?.abs());
    }
    let common_zeros: Vec<usize> = d_at_nu
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() <= tol.common_zero_abs)
        .map(|(i, _)| i + 1)
        .collect();
    let min_abs_d = d_at_nu.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
    Ok(AssumptionReport {
        a1,
        a2,
        a3: common_zeros.is_empty(),
        min_gap,
        closest_pair,
        min_lambda,
        min_abs_d,
        max_abs_h,
        common_zeros,
        d_at_nu,
    })
}

/// One row of the tan-equation plot data: `(ρ, tan ρm, -sin ρ / (2 cos ρ - 2))`,
/// with `None` within `mask` of a singularity.
pub type TanSample = (f64, Option<f64>, Option<f64>);

pub fn tan_equation_samples(m: usize, samples: usize, mask: f64) -> Vec<TanSample> {
    let mf = m as f64;
    (1..samples)
        .map(|i| {
            let rho = PI * i as f64 / samples as f64;
            // poles of tan(ρm) at ρ = (j + ½)π/m
            let pole_dist = {
                let t = rho * mf / PI - 0.5;
                (t - t.round()).abs() * PI / mf
            };
            let lhs = (pole_dist > mask).then(|| (rho * mf).tan());
            let rhs = (rho > mask).then(|| -rho.sin() / (2.0 * rho.cos() - 2.0));
            (rho, lhs, rhs)
        })
        .collect()
}
