//! Dirichlet spectral data of the loop and reconstruction of its potential.
//!
//! Input is the pair `h(λ) = S2(1, λ)`, `d(λ) = S2^[1](1, λ) + C2(1, λ) - 2`
//! together with signs `ω_n = sign H(ν_n)`, `H = C2(1, ·) - S2^[1](1, ·)`.
//! At zeros `ν_n` of `h` the Wronskian gives `(d + 2)² - H² = 4`, hence
//!
//! ```text
//! H(ν_n) = ω_n √(d(ν_n)(d(ν_n) + 4)),   S2^[1](1, ν_n) = (d(ν_n) + 2 - H(ν_n)) / 2,
//! β_n = h'(ν_n) S2^[1](1, ν_n) = ∫ S2(x, ν_n)² dx.
//! ```
//!
//! The potential is then recovered from `{ν_n, β_n}` with the Gelfand–Levitan
//! equation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Assumption, LassoError, Result, StageExt};
use crate::grid::GridFunction;
use crate::quasi_ode::{integrate_fundamental, EndpointData, Tolerances};
use crate::roots::brent_with_values;
use crate::spectral_forward::SignSequence;
use crate::trig::sin_over_rho;

/// Forward evaluation of `h`, `d` and `H` from a known loop potential.
#[derive(Debug, Clone)]
pub struct LoopForward {
    sigma2: GridFunction,
    tol: Tolerances,
}

impl LoopForward {
    pub fn new(sigma2: GridFunction, tol: Tolerances) -> Result<Self> {
        if (sigma2.length() - 1.0).abs() > 1e-12 {
            return Err(LassoError::InvalidInput(format!(
                "loop potential must live on [0, 1], got length {}",
                sigma2.length()
            )));
        }
        Ok(Self { sigma2, tol })
    }

    pub fn sigma2(&self) -> &GridFunction {
        &self.sigma2
    }

    pub fn endpoint(&self, lambda: f64) -> Result<EndpointData> {
        integrate_fundamental(&self.sigma2, lambda, &self.tol)
    }

    pub fn h(&self, lambda: f64) -> Result<f64> {
        Ok(self.endpoint(lambda)?.s)
    }

    pub fn d(&self, lambda: f64) -> Result<f64> {
        let e = self.endpoint(lambda)?;
        Ok(e.s1 + e.c - 2.0)
    }

    pub fn big_h(&self, lambda: f64) -> Result<f64> {
        let e = self.endpoint(lambda)?;
        Ok(e.c - e.s1)
    }

    /// `λ >= -max σ²` for the Dirichlet problem on the loop.
    pub fn lower_bound(&self) -> f64 {
        -self.sigma2.sup_norm().powi(2)
    }
}

/// The first `n` zeros of `h`, scanning `s = sign(λ)√|λ|` from
/// `-√(-lambda_floor)` to `π(n + ½)` and requiring exactly `n` sign changes.
pub fn dirichlet_zeros<F>(h: &F, n: usize, lambda_floor: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if n == 0 {
        return Ok(Vec::new());
    }
    let s_floor = -((-lambda_floor).max(0.0).sqrt() + 0.5);
    let s_top = PI * (n as f64 + 0.5);
    let mut samples = Vec::new();
    let neg = 32;
    for i in 0..neg {
        samples.push(s_floor * (1.0 - i as f64 / neg as f64));
    }
    let per = 8;
    let cells = 2 * n + 1;
    let cell = s_top / cells as f64;
    for i in 0..cells * per {
        samples.push(i as f64 * cell / per as f64);
    }
    samples.push(s_top);

    let hs = |s: f64| h(s * s.abs());
    let values: Vec<f64> = samples.par_iter().map(|&s| hs(s)).collect::<Result<_>>()?;
    let mut exact = Vec::new();
    let mut brackets = Vec::new();
    for i in 0..samples.len() - 1 {
        if values[i] == 0.0 {
            exact.push(samples[i]);
        } else if values[i] * values[i + 1] < 0.0 {
            brackets.push(i);
        }
    }
    if brackets.len() + exact.len() != n {
        return Err(LassoError::NumberingAmbiguity {
            lo: s_floor * s_floor.abs(),
            hi: s_top * s_top,
            found: brackets.len() + exact.len(),
            expected: n,
        });
    }
    let mut roots: Vec<f64> = brackets
        .par_iter()
        .map(|&i| {
            let (a, b) = (samples[i], samples[i + 1]);
            brent_with_values(
                hs,
                a,
                values[i],
                b,
                values[i + 1],
                1e-15 * b.abs().max(1.0),
                "Dirichlet zero of h",
            )
        })
        .collect::<Result<_>>()?;
    roots.extend(exact);
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(roots.into_iter().map(|s| s * s.abs()).collect())
}

/// First `n` Dirichlet eigenvalues of the loop, i.e. zeros of `S2(1, λ)`.
pub fn loop_dirichlet_spectrum(sigma2: &GridFunction, n: usize) -> Result<Vec<f64>> {
    let fwd = LoopForward::new(sigma2.clone(), Tolerances::uniform(1e-12))?;
    dirichlet_zeros(&|l| fwd.h(l), n, fwd.lower_bound())
}

/// `ω √(d(d + 4))`; a negative radicand is an error.
pub fn compute_h_at_nu(d_val: f64, omega: i8) -> Result<f64> {
    compute_h_at_nu_clamped(d_val, omega, 0.0)
}

/// As [`compute_h_at_nu`], but radicands in `[-radicand_tol, 0)` are treated
/// as zero.
pub fn compute_h_at_nu_clamped(d_val: f64, omega: i8, radicand_tol: f64) -> Result<f64> {
    if omega != 1 && omega != -1 {
        return Err(LassoError::InvalidInput(format!(
            "sign must be ±1, got {omega}"
        )));
    }
    let r = d_val * (d_val + 4.0);
    if !r.is_finite() {
        return Err(LassoError::SpectralDataInconsistency(format!(
            "d(ν) = {d_val} is not finite"
        )));
    }
    if r < 0.0 {
        if r >= -radicand_tol {
            return Ok(0.0);
        }
        return Err(LassoError::SpectralDataInconsistency(format!(
            "d(ν)(d(ν) + 4) = {r:e} < 0 for d(ν) = {d_val}; d must lie outside (-4, 0) at zeros of h"
        )));
    }
    Ok(omega as f64 * r.sqrt())
}

pub fn compute_s21_at_nu(d_val: f64, h_val: f64) -> f64 {
    0.5 * (d_val + 2.0 - h_val)
}

/// `dh/dλ` at `nu` by Ridders' extrapolation of central differences, with
/// initial step `1e-3 · max(1, |ν|)`.
pub fn h_derivative<F>(h_at: &F, nu: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    let mut step = 1e-3 * nu.abs().max(1.0);
    let mut a = [[0.0f64; NTAB]; NTAB];
    a[0][0] = (h_at(nu + step)? - h_at(nu - step)?) / (2.0 * step);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        step /= CON;
        a[0][i] = (h_at(nu + step)? - h_at(nu - step)?) / (2.0 * step);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    if !best.is_finite() || best.abs() < 1e-12 {
        return Err(LassoError::MultipleZero {
            nu,
            derivative: best,
        });
    }
    Ok(best)
}

/// Dirichlet spectral data of the loop together with the intermediate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSpectralData {
    pub nus: Vec<f64>,
    pub h_vals: Vec<f64>,
    pub s21_vals: Vec<f64>,
    pub betas: Vec<f64>,
    pub omegas: SignSequence,
}

/// `β_n = h'(ν_n) S2^[1](1, ν_n)`; every `β_n` must be positive.
pub fn compute_norming_constants<F>(data: &PeriodicSpectralData, h_at: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync + ?Sized,
{
    if data.s21_vals.len() != data.nus.len() {
        return Err(LassoError::InvalidInput(format!(
            "{} values of S2^[1](1, ν_n) for {} zeros",
            data.s21_vals.len(),
            data.nus.len()
        )));
    }
    let betas: Vec<f64> = data
        .nus
        .par_iter()
        .zip(&data.s21_vals)
        .map(|(&nu, &s21)| Ok(h_derivative(h_at, nu)? * s21))
        .collect::<Result<_>>()?;
    if let Some(i) = betas.iter().position(|b| !(*b > 0.0)) {
        return Err(LassoError::SpectralDataInconsistency(format!(
            "norming constant β_{} = {} is not positive",
            i + 1,
            betas[i]
        )));
    }
    Ok(betas)
}

/// Spectral data in the checkpoint file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDataFile {
    pub nus: Vec<f64>,
    pub betas: Vec<f64>,
    pub omegas: SignSequence,
}

impl From<&PeriodicSpectralData> for SpectralDataFile {
    fn from(d: &PeriodicSpectralData) -> Self {
        Self {
            nus: d.nus.clone(),
            betas: d.betas.clone(),
            omegas: d.omegas.clone(),
        }
    }
}

/// Condition numbers above this make [`gl_reconstruct`] fail.
pub const GL_CONDITION_LIMIT: f64 = 1e10;

/// Output of the Gelfand–Levitan solve.
#[derive(Debug, Clone)]
pub struct GlReconstruction {
    pub sigma2: GridFunction,
    /// 2-norm condition number of the largest Nyström system.
    pub condition: f64,
}

/// Recovers `σ2` (normalized to `σ2(0) = 0`) from `n` Dirichlet eigenvalues
/// and norming constants on a uniform grid of `grid` nodes.
///
/// The kernel is
/// `F(x, t) = Σ_{k<=n} [sin ρ_k x sin ρ_k t / (ν_k β_k) - 2 sin πkx sin πkt]`;
/// for every node `x` the equation
/// `G(x, t) + F(x, t) + ∫_0^x G(x, s) F(s, t) ds = 0` is solved by
/// trapezoidal Nyström, and `σ2(x) = 2 G(x, x)`.
pub fn gl_reconstruct(nus: &[f64], betas: &[f64], n: usize, grid: usize) -> Result<GridFunction> {
    Ok(gl_reconstruct_full(nus, betas, n, grid)?.sigma2)
}

pub fn gl_reconstruct_full(
    nus: &[f64],
    betas: &[f64],
    n: usize,
    grid: usize,
) -> Result<GlReconstruction> {
    if n == 0 || grid < 2 {
        return Err(LassoError::InvalidInput(
            "need at least one eigenvalue and two grid nodes".into(),
        ));
    }
    if nus.len() < n || betas.len() < n {
        return Err(LassoError::InvalidInput(format!(
            "truncation {n} exceeds the data ({} eigenvalues, {} norming constants)",
            nus.len(),
            betas.len()
        )));
    }
    if let Some(i) = (1..n).find(|&i| !(nus[i] > nus[i - 1])) {
        return Err(LassoError::InvalidInput(format!(
            "eigenvalues must increase strictly: ν_{} = {} after ν_{} = {}",
            i + 1,
            nus[i],
            i,
            nus[i - 1]
        )));
    }
    if let Some(i) = betas[..n].iter().position(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(LassoError::InvalidInput(format!(
            "norming constant β_{} = {} is not positive",
            i + 1,
            betas[i]
        )));
    }

    let h = 1.0 / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid).map(|i| i as f64 * h).collect();
    // phi[k][i] = sin(ρ_k x_i)/ρ_k, psi[k][i] = sin(π(k+1) x_i)
    let phi: Vec<Vec<f64>> = (0..n)
        .map(|k| xs.iter().map(|&x| sin_over_rho(nus[k], x)).collect())
        .collect();
    let psi: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let w = PI * (k + 1) as f64;
            xs.iter().map(|&x| (w * x).sin()).collect()
        })
        .collect();
    let mut f = DMatrix::<f64>::zeros(grid, grid);
    for k in 0..n {
        let inv_beta = 1.0 / betas[k];
        for i in 0..grid {
            let (pi, si) = (phi[k][i] * inv_beta, 2.0 * psi[k][i]);
            for j in 0..=i {
                let v = pi * phi[k][j] - si * psi[k][j];
                f[(i, j)] += v;
                if j != i {
                    f[(j, i)] += v;
                }
            }
        }
    }

    let system = |i: usize| -> DMatrix<f64> {
        let size = i + 1;
        let mut a = DMatrix::<f64>::identity(size, size);
        for l in 0..size {
            let w = if l == 0 || l == i { 0.5 * h } else { h };
            for p in 0..size {
                a[(p, l)] += w * f[(l, p)];
            }
        }
        a
    };

    let condition = {
        let a = system(grid - 1);
        let sv = a.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    };
    if !(condition <= GL_CONDITION_LIMIT) {
        return Err(LassoError::IllConditioned {
            condition,
            limit: GL_CONDITION_LIMIT,
        });
    }

    let diag: Vec<f64> = (1..grid)
        .into_par_iter()
        .map(|i| {
            let a = system(i);
            let rhs = nalgebra::DVector::from_iterator(i + 1, (0..=i).map(|p| -f[(i, p)]));
            let g = a.lu().solve(&rhs).ok_or_else(|| {
                LassoError::DegenerateSystem(format!(
                    "Gelfand-Levitan system singular at x = {}",
                    xs[i]
                ))
            })?;
            Ok(2.0 * g[i])
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(grid);
    values.push(0.0);
    values.extend(diag);
    Ok(GlReconstruction {
        sigma2: GridFunction::new(1.0, values)?,
        condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Algorithm1Options {
    /// Gelfand–Levitan grid nodes.
    pub gl_grid: usize,
    /// Negative radicands `d(d + 4)` down to `-radicand_tol` are set to zero.
    pub radicand_tol: f64,
    /// `|d(ν_n)|` at or below this is a common zero of `h` and `d`.
    pub common_zero_tol: f64,
    /// Lower end of the scan for zeros of `h`.
    pub lambda_floor: f64,
}

impl Default for Algorithm1Options {
    fn default() -> Self {
        Self {
            gl_grid: 200,
            radicand_tol: 1e-9,
            common_zero_tol: 1e-10,
            lambda_floor: -100.0,
        }
    }
}

/// Steps 1 to 4: zeros of `h`, `H(ν_n)`, `S2^[1](1, ν_n)`, `β_n`.
pub fn periodic_spectral_data<H, D>(
    h_at: &H,
    d_at: &D,
    omegas: &SignSequence,
    n: usize,
    opts: &Algorithm1Options,
) -> Result<PeriodicSpectralData>
where
    H: Fn(f64) -> Result<f64> + Sync + ?Sized,
    D: Fn(f64) -> Result<f64> + Sync + ?Sized,
{
    if omegas.len() != n {
        return Err(LassoError::InvalidInput(format!(
            "expected {n} signs, got {}",
            omegas.len()
        )));
    }
    let nus = dirichlet_zeros(&|l| h_at(l), n, opts.lambda_floor).stage("zeros of h")?;
    let d_vals: Vec<f64> = nus
        .par_iter()
        .map(|&nu| d_at(nu))
        .collect::<Result<_>>()
        .stage("d at zeros of h")?;
    let common: Vec<String> = d_vals
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() <= opts.common_zero_tol)
        .map(|(i, d)| format!("n = {}: d(ν_n) = {d:e}", i + 1))
        .collect();
    if !common.is_empty() {
        return Err(LassoError::AssumptionViolation {
            assumption: Assumption::A3,
            detail: format!("h and d share zeros at {}", common.join(", ")),
        });
    }
    let h_vals: Vec<f64> = d_vals
        .iter()
        .zip(omegas.as_slice())
        .map(|(&d, &w)| compute_h_at_nu_clamped(d, w, opts.radicand_tol))
        .collect::<Result<_>>()
        .stage("H at zeros of h")?;
    let s21_vals: Vec<f64> = d_vals
        .iter()
        .zip(&h_vals)
        .map(|(&d, &hv)| compute_s21_at_nu(d, hv))
        .collect();
    let mut data = PeriodicSpectralData {
        nus,
        h_vals,
        s21_vals,
        betas: Vec::new(),
        omegas: omegas.clone(),
    };
    data.betas = compute_norming_constants(&data, h_at).stage("norming constants")?;
    Ok(data)
}

/// Full reconstruction of `σ2` from `h`, `d` and the signs.
pub fn algorithm1<H, D>(h_at: &H, d_at: &D, omegas: &SignSequence, n: usize) -> Result<GridFunction>
where
    H: Fn(f64) -> Result<f64> + Sync + ?Sized,
    D: Fn(f64) -> Result<f64> + Sync + ?Sized,
{
    Ok(algorithm1_with(h_at, d_at, omegas, n, &Algorithm1Options::default())?.0)
}

pub fn algorithm1_with<H, D>(
    h_at: &H,
    d_at: &D,
    omegas: &SignSequence,
    n: usize,
    opts: &Algorithm1Options,
) -> Result<(GridFunction, PeriodicSpectralData, f64)>
where
    H: Fn(f64) -> Result<f64> + Sync + ?Sized,
    D: Fn(f64) -> Result<f64> + Sync + ?Sized,
{
    let data = periodic_spectral_data(h_at, d_at, omegas, n, opts)?;
    let gl = gl_reconstruct_full(&data.nus, &data.betas, n, opts.gl_grid)
        .stage("Gelfand-Levitan reconstruction")?;
    Ok((gl.sigma2, data, gl.condition))
}

/// Signs of `H` at the loop's Dirichlet eigenvalues, computed forward.
pub fn forward_signs(fwd: &LoopForward, nus: &[f64]) -> Result<SignSequence> {
    let h: Vec<f64> = nus
        .par_iter()
        .map(|&nu| fwd.big_h(nu))
        .collect::<Result<_>>()?;
    Ok(SignSequence::from_values(&h))
}
