//! CSV and JSON artifacts. Numbers are written with 15 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{LassoError, Result};
use crate::spectral_forward::{
    alpha_bracket, char_d, EigenIndex, Eigenvalue, Subspectrum, TanSample, Truncation,
};

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.14e}")
    }
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.14e}").parse().unwrap_or(x)
    } else {
        x
    }
}

pub fn round15_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| round15(x)).collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub const SPECTRUM_HEADER: [&str; 6] = ["n", "j", "lambda", "rho", "asymptote", "residual"];

/// Eigenvalues with their labels; `shift` is added to every `λ` on output.
pub fn write_spectrum_csv(
    path: &Path,
    eigs: &[Eigenvalue],
    alphas: &[f64],
    shift: f64,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SPECTRUM_HEADER)?;
    for e in eigs {
        let lambda = e.lambda + shift;
        let shifted = Eigenvalue { lambda, ..*e };
        w.write_record([
            e.index.n.to_string(),
            e.index.j.to_string(),
            fmt_num(lambda),
            fmt_num(shifted.rho()),
            fmt_num(e.index.asymptote(alphas)),
            fmt_num(e.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<Eigenvalue>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SPECTRUM_HEADER {
        return Err(LassoError::InvalidInput(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| LassoError::InvalidInput(format!("cannot parse {what} = {s:?}")))
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let n: i64 = rec[0]
            .parse()
            .map_err(|_| LassoError::InvalidInput(format!("bad n {:?}", &rec[0])))?;
        let j: usize = rec[1]
            .parse()
            .map_err(|_| LassoError::InvalidInput(format!("bad j {:?}", &rec[1])))?;
        out.push(Eigenvalue {
            index: EigenIndex::new(n, j)?,
            lambda: parse(&rec[2], "lambda")?,
            residual: parse(&rec[5], "residual")?,
        });
    }
    Ok(out)
}

/// Rebuilds a subspectrum from an exported CSV.
pub fn read_subspectrum_csv(
    path: &Path,
    alphas: &[f64],
    k: usize,
    bounds: Truncation,
) -> Result<Subspectrum> {
    let eigs = read_spectrum_csv(path)?;
    crate::spectral_forward::extract_subspectrum(&eigs, alphas, k, bounds)
}

pub fn write_alpha_csv(path: &Path, m: usize, alphas: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "alpha", "lower", "upper", "residual"])?;
    for (i, &a) in alphas.iter().enumerate() {
        let (lo, hi) = alpha_bracket(m, i + 1);
        w.write_record([
            (i + 1).to_string(),
            fmt_num(a),
            fmt_num(lo),
            fmt_num(hi),
            fmt_num(char_d(m, a).abs()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plot_csv(path: &Path, rows: &[TanSample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["rho", "tan_rho_m", "rhs"])?;
    for &(rho, lhs, rhs) in rows {
        w.write_record([
            fmt_num(rho),
            fmt_num(lhs.unwrap_or(f64::NAN)),
            fmt_num(rhs.unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}
