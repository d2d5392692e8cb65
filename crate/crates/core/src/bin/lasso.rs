use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lasso_spectral::error::{LassoError, Result};
use lasso_spectral::harness::experiments::{
    run_check, run_forward, run_invert, run_roundtrip, run_subspectrum, PLOT_CSV,
};
use lasso_spectral::harness::io::{fmt_num, write_alpha_csv};
use lasso_spectral::harness::{emit_plot_data, ExperimentConfig};
use lasso_spectral::spectral_forward::{alpha_bracket, char_d, solve_alpha};

#[derive(Parser)]
#[command(
    name = "lasso",
    version,
    about = "Spectral computations on the lasso graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<f64>,
}

#[derive(Args)]
struct MOnly {
    /// Boundary edge length; read from --config when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, subspectrum, signs and the α table.
    Forward(Common),
    /// Subspectrum of branch k and the signs only.
    Subspectrum(Common),
    /// Reconstruct σ2 from the files written by `forward`.
    Invert(Common),
    /// Forward run followed by reconstruction, with a report.
    Roundtrip(Common),
    /// Roots of the tan equation.
    Alpha(MOnly),
    /// Curves of the tan equation for plotting.
    Plotdata(MOnly),
    /// Assumption and conditioning diagnostics.
    Check(Common),
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(&c.config)?.with_overrides(c.n, c.k, c.shift)
}

fn resolve_m(a: &MOnly) -> Result<usize> {
    match (a.m, &a.config) {
        (Some(m), _) => Ok(m),
        (None, Some(p)) => Ok(ExperimentConfig::from_path(p)?.m),
        (None, None) => Err(LassoError::Config("pass --m or --config".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Forward(c) => {
            let cfg = load(&c)?;
            let res = run_forward(&cfg, &c.out)?;
            println!(
                "{} eigenvalues, {} in the subspectrum, written to {}",
                res.eigenvalues.len(),
                res.subspectrum.entries.len(),
                c.out.display()
            );
        }
        Command::Subspectrum(c) => {
            let cfg = load(&c)?;
            let sub = run_subspectrum(&cfg, &c.out)?;
            println!(
                "{} eigenvalues written to {}",
                sub.entries.len(),
                c.out.display()
            );
        }
        Command::Invert(c) => {
            let cfg = load(&c)?;
            let o = run_invert(&cfg, &c.out)?;
            println!(
                "gram_condition {}",
                fmt_num(o.reconstruction.solution.gram_condition)
            );
            println!("residual_norm {}", fmt_num(o.reconstruction.residual_norm));
        }
        Command::Roundtrip(c) => {
            let cfg = load(&c)?;
            let r = run_roundtrip(&cfg, Some(&c.out))?;
            println!("l2_error {}", fmt_num(r.l2_error));
            println!("gram_condition {}", fmt_num(r.gram_condition));
            println!("residual_norm {}", fmt_num(r.residual_norm));
            println!("total_s {}", fmt_num(r.timings.total_s));
            if !r.forward_common_zeros.is_empty() {
                eprintln!(
                    "warning: forward d(ν_n) vanishes at n = {:?}; the fixture violates A3",
                    r.forward_common_zeros
                );
            }
        }
        Command::Alpha(a) => {
            let m = resolve_m(&a)?;
            let alphas = solve_alpha(m)?;
            println!("k,alpha,lower,upper,residual");
            for (i, &x) in alphas.iter().enumerate() {
                let (lo, hi) = alpha_bracket(m, i + 1);
                println!(
                    "{},{},{},{},{}",
                    i + 1,
                    fmt_num(x),
                    fmt_num(lo),
                    fmt_num(hi),
                    fmt_num(char_d(m, x).abs())
                );
            }
            std::fs::create_dir_all(&a.out)?;
            write_alpha_csv(&a.out.join("alpha.csv"), m, &alphas)?;
        }
        Command::Plotdata(a) => {
            let m = resolve_m(&a)?;
            std::fs::create_dir_all(&a.out)?;
            let path = a.out.join(PLOT_CSV);
            emit_plot_data(m, &path)?;
            println!("{}", path.display());
        }
        Command::Check(c) => {
            let cfg = load(&c)?;
            let rep = run_check(&cfg)?;
            std::fs::create_dir_all(&c.out)?;
            lasso_spectral::harness::io::write_json(&c.out.join("check.json"), &rep)?;
            let a = &rep.assumptions;
            println!("A1 {} (min gap {})", a.a1, fmt_num(a.min_gap));
            println!("A2 {} (min lambda {})", a.a2, fmt_num(a.min_lambda));
            println!("A3 {} (min |d(nu_n)| {})", a.a3, fmt_num(a.min_abs_d));
            println!("gram_condition {}", fmt_num(rep.gram_condition));
            a.ensure()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.assumption().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
