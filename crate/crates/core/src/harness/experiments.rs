//! Forward runs, reconstructions and diagnostics driven by a configuration.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::io::{
    read_json, read_subspectrum_csv, round15, round15_all, write_alpha_csv, write_json,
    write_plot_csv, write_spectrum_csv,
};
use crate::error::{LassoError, Result, StageExt};
use crate::partial_inverse::{
    algorithm2_with, assemble_moment_system_with, build_v0_basis, gram_condition, v0_partial_sums,
    Algorithm2Options, Algorithm2Output, ReconstructionReport,
};
use crate::periodic_inverse::{
    dirichlet_zeros, forward_signs, Algorithm1Options, LoopForward, SpectralDataFile,
};
use crate::spectral_forward::{
    check_assumptions, enumerate_eigenvalues, extract_subspectrum, solve_alpha,
    tan_equation_samples, AssumptionReport, AssumptionTolerances, Eigenvalue, LassoProblem,
    SignSequence, Subspectrum,
};

pub const EIGENVALUES_CSV: &str = "eigenvalues.csv";
pub const SUBSPECTRUM_CSV: &str = "subspectrum.csv";
pub const OMEGAS_JSON: &str = "omegas.json";
pub const ALPHA_CSV: &str = "alpha.csv";
pub const PLOT_CSV: &str = "tan_plot.csv";
pub const RECONSTRUCTION_JSON: &str = "reconstruction.json";
pub const SPECTRAL_DATA_JSON: &str = "spectral_data.json";
pub const ROUNDTRIP_JSON: &str = "roundtrip.json";

/// Signs together with the loop eigenvalues they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaFile {
    pub omegas: SignSequence,
    pub nus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub alphas: Vec<f64>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub subspectrum: Subspectrum,
    pub nus: Vec<f64>,
    pub omegas: SignSequence,
}

fn problem(cfg: &ExperimentConfig) -> Result<LassoProblem> {
    Ok(
        LassoProblem::new(cfg.m, cfg.sigma1_grid()?, cfg.sigma2_grid()?)?
            .with_tolerances(cfg.tolerances.integrator()),
    )
}

fn loop_forward(cfg: &ExperimentConfig) -> Result<LoopForward> {
    LoopForward::new(cfg.sigma2_grid()?, cfg.tolerances.integrator())
}

/// Spectrum, subspectrum and forward signs without writing files.
pub fn forward(cfg: &ExperimentConfig) -> Result<ForwardOutput> {
    let p = problem(cfg)?;
    let alphas = solve_alpha(cfg.m).stage("tan equation")?;
    let eigenvalues = enumerate_eigenvalues(&p, cfg.n, cfg.n0()).stage("enumeration")?;
    let subspectrum =
        extract_subspectrum(&eigenvalues, &alphas, cfg.k, cfg.bounds()).stage("subspectrum")?;
    let fwd = loop_forward(cfg)?;
    let nus = dirichlet_zeros(&|l| fwd.h(l), cfg.n_nu(), fwd.lower_bound())
        .stage("loop Dirichlet spectrum")?;
    let omegas = forward_signs(&fwd, &nus).stage("signs")?;
    Ok(ForwardOutput {
        alphas,
        eigenvalues,
        subspectrum,
        nus,
        omegas,
    })
}

/// Writes the eigenvalue and subspectrum CSVs, the sign JSON and the `α_k`
/// table into `out`.
pub fn run_forward(cfg: &ExperimentConfig, out: &Path) -> Result<ForwardOutput> {
    std::fs::create_dir_all(out)?;
    let res = forward(cfg)?;
    write_spectrum_csv(
        &out.join(EIGENVALUES_CSV),
        &res.eigenvalues,
        &res.alphas,
        cfg.shift,
    )?;
    write_spectrum_csv(
        &out.join(SUBSPECTRUM_CSV),
        &res.subspectrum.entries,
        &res.alphas,
        cfg.shift,
    )?;
    write_omegas(out, &res)?;
    write_alpha_csv(&out.join(ALPHA_CSV), cfg.m, &res.alphas)?;
    Ok(res)
}

fn write_omegas(out: &Path, res: &ForwardOutput) -> Result<()> {
    write_json(
        &out.join(OMEGAS_JSON),
        &OmegaFile {
            omegas: res.omegas.clone(),
            nus: round15_all(&res.nus),
        },
    )
}

/// Writes only the subspectrum CSV (and the signs needed to invert it).
pub fn run_subspectrum(cfg: &ExperimentConfig, out: &Path) -> Result<Subspectrum> {
    std::fs::create_dir_all(out)?;
    let res = forward(cfg)?;
    write_spectrum_csv(
        &out.join(SUBSPECTRUM_CSV),
        &res.subspectrum.entries,
        &res.alphas,
        cfg.shift,
    )?;
    write_omegas(out, &res)?;
    Ok(res.subspectrum)
}

pub fn algorithm2_options(cfg: &ExperimentConfig) -> Algorithm2Options {
    Algorithm2Options {
        tol: cfg.tolerances.integrator(),
        periodic: Algorithm1Options {
            gl_grid: cfg.gl_grid,
            radicand_tol: cfg.tolerances.radicand,
            common_zero_tol: cfg.tolerances.common_zero,
            ..Algorithm1Options::default()
        },
        ..Algorithm2Options::default()
    }
}

fn write_reconstruction(out: &Path, o: &Algorithm2Output) -> Result<()> {
    let mut rep = ReconstructionReport::from(o);
    rep.k = round15_all(&rep.k);
    rep.n = round15_all(&rep.n);
    rep.recovered_sigma2 = round15_all(&rep.recovered_sigma2);
    rep.residual_norm = round15(rep.residual_norm);
    rep.gram_condition = round15(rep.gram_condition);
    write_json(&out.join(RECONSTRUCTION_JSON), &rep)?;
    write_json(
        &out.join(SPECTRAL_DATA_JSON),
        &SpectralDataFile {
            nus: round15_all(&o.periodic.nus),
            betas: round15_all(&o.periodic.betas),
            omegas: o.periodic.omegas.clone(),
        },
    )
}

/// Reconstructs `σ2` from `subspectrum.csv` and `omegas.json` in `dir`
/// (as written by [`run_forward`]); only `σ1` is taken from the config.
/// Shifted exports are shifted back before inversion.
pub fn run_invert(cfg: &ExperimentConfig, dir: &Path) -> Result<Algorithm2Output> {
    let alphas = solve_alpha(cfg.m)?;
    let mut sub = read_subspectrum_csv(&dir.join(SUBSPECTRUM_CSV), &alphas, cfg.k, cfg.bounds())?;
    if cfg.shift != 0.0 {
        sub = sub.shifted(-cfg.shift);
    }
    let om: OmegaFile = read_json(&dir.join(OMEGAS_JSON))?;
    let omegas = truncate_signs(&om.omegas, cfg.n_nu())?;
    let o = algorithm2_with(&cfg.sigma1_grid()?, &sub, &omegas, &algorithm2_options(cfg))?;
    write_reconstruction(dir, &o)?;
    Ok(o)
}

fn truncate_signs(omegas: &SignSequence, n: usize) -> Result<SignSequence> {
    if omegas.len() < n {
        return Err(LassoError::InvalidInput(format!(
            "{n} signs requested, {} available",
            omegas.len()
        )));
    }
    SignSequence::new(omegas.as_slice()[..n].to_vec())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub forward_s: f64,
    pub inverse_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub n0: usize,
    pub n_nu: usize,
    /// `min_c ‖σ2_rec - σ2 - c‖_L2`.
    pub l2_error: f64,
    pub residual_norm: f64,
    pub gram_condition: f64,
    pub gl_condition: f64,
    /// `min |d(ν_n)|` of the reconstructed `d` at the recovered `ν_n`.
    pub min_abs_d_reconstructed: f64,
    /// `n` where the forward `d(ν_n)` vanishes to tolerance; non-empty means
    /// the fixture itself violates A3.
    pub forward_common_zeros: Vec<usize>,
    pub shift: f64,
    pub min_lambda_shifted: f64,
    pub recovered_sigma2: Vec<f64>,
    pub timings: StageTimings,
}

impl RoundtripReport {
    /// The report with timings zeroed, for determinism checks.
    pub fn without_timings(&self) -> RoundtripReport {
        RoundtripReport {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }
}

/// Forward run followed by the reconstruction of `σ2` from `σ1`, the
/// subspectrum and the forward signs.
pub fn run_roundtrip(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RoundtripReport> {
    let t0 = Instant::now();
    let fwd_out = forward(cfg)?;
    let t1 = Instant::now();
    let sigma1 = cfg.sigma1_grid()?;
    let sigma2 = cfg.sigma2_grid()?;
    let o = algorithm2_with(
        &sigma1,
        &fwd_out.subspectrum,
        &fwd_out.omegas,
        &algorithm2_options(cfg),
    )?;
    let t2 = Instant::now();

    let loop_fwd = loop_forward(cfg)?;
    let forward_d: Vec<f64> = fwd_out
        .nus
        .par_iter()
        .map(|&nu| loop_fwd.d(nu))
        .collect::<Result<_>>()?;
    let forward_common_zeros = forward_d
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() <= cfg.tolerances.forward_common_zero)
        .map(|(i, _)| i + 1)
        .collect();
    let sol = &o.reconstruction.solution;
    let min_abs_d = o
        .periodic
        .nus
        .iter()
        .map(|&nu| sol.d(nu).abs())
        .fold(f64::INFINITY, f64::min);
    let min_lambda_shifted =
        fwd_out.subspectrum.lambdas().fold(f64::INFINITY, f64::min) + cfg.shift;
    let l2 = o.sigma2.l2_distance_mod_constant(&sigma2)?;

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_reconstruction(dir, &o)?;
    }
    let t3 = Instant::now();
    let report = RoundtripReport {
        m: cfg.m,
        k: cfg.k,
        n: cfg.n,
        n0: cfg.n0(),
        n_nu: cfg.n_nu(),
        l2_error: round15(l2),
        residual_norm: round15(o.reconstruction.residual_norm),
        gram_condition: round15(sol.gram_condition),
        gl_condition: round15(o.gl_condition),
        min_abs_d_reconstructed: round15(min_abs_d),
        forward_common_zeros,
        shift: cfg.shift,
        min_lambda_shifted: round15(min_lambda_shifted),
        recovered_sigma2: round15_all(o.sigma2.values()),
        timings: StageTimings {
            forward_s: (t1 - t0).as_secs_f64(),
            inverse_s: (t2 - t1).as_secs_f64(),
            total_s: (t3 - t0).as_secs_f64(),
        },
    };
    if let Some(dir) = out {
        write_json(&dir.join(ROUNDTRIP_JSON), &report)?;
    }
    Ok(report)
}

/// Tan-equation curves on `(0, π)` for plotting.
pub fn emit_plot_data(m: usize, path: &Path) -> Result<()> {
    if m == 0 {
        return Err(LassoError::InvalidInput("m must be at least 1".into()));
    }
    write_plot_csv(path, &tan_equation_samples(m, 4000, 1e-3))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    /// Assumptions evaluated on the shifted subspectrum and forward `h`, `d`.
    pub assumptions: AssumptionReport,
    pub gram_condition: f64,
    /// Partial sums of `‖v_{nj} - v⁰_{nj}‖²` ordered by reference frequency.
    pub v0_partial_sums: Vec<(f64, f64)>,
}

/// Forward diagnostics: A1 to A3, Gram conditioning, closeness to the
/// zero-potential system.
pub fn run_check(cfg: &ExperimentConfig) -> Result<CheckReport> {
    let f = forward(cfg)?;
    let loop_fwd = loop_forward(cfg)?;
    let shifted = f.subspectrum.shifted(cfg.shift);
    let tol = AssumptionTolerances {
        distinct_rel: cfg.tolerances.distinct,
        common_zero_abs: cfg.tolerances.forward_common_zero,
    };
    let assumptions =
        check_assumptions(&shifted, |l| loop_fwd.h(l), |l| loop_fwd.d(l), &f.nus, &tol)?;
    let sigma1 = cfg.sigma1_grid()?;
    let (gram, sums) = if f.subspectrum.entries.iter().all(|e| e.lambda > 0.0) {
        let system =
            assemble_moment_system_with(&sigma1, &f.subspectrum, &cfg.tolerances.integrator())?;
        let v0 = build_v0_basis(cfg.k, f.subspectrum.alpha_k, cfg.m, cfg.bounds())?;
        (gram_condition(&system)?, v0_partial_sums(&system, &v0)?)
    } else {
        (f64::NAN, Vec::new())
    };
    Ok(CheckReport {
        assumptions,
        gram_condition: gram,
        v0_partial_sums: sums,
    })
}
