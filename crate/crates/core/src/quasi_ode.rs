//! Fundamental solutions of `-(y^[1])' - σ y^[1] - σ² y = λ y` on one edge,
//! with quasi-derivative `y^[1] = y' - σ y`.
//!
//! In the variables `u = y`, `v = y^[1]` the equation is the first-order
//! system
//!
//! ```text
//! u' = σ u + v
//! v' = -σ v - (σ² + λ) u
//! ```
//!
//! which is integrated with an embedded Dormand–Prince 5(4) pair. Steps never
//! straddle a grid node of `σ`, so the right-hand side is smooth (linear in
//! `x` through `σ`) within every step.

use serde::{Deserialize, Serialize};

use crate::error::{LassoError, Result};
use crate::grid::GridFunction;

/// Local error tolerances of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
        }
    }
}

/// `C(l, λ)`, `C^[1](l, λ)`, `S(l, λ)`, `S^[1](l, λ)` for one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointData {
    pub c: f64,
    pub c1: f64,
    pub s: f64,
    pub s1: f64,
    pub lambda: f64,
}

/// `|C S^[1] - C^[1] S - 1|`.
pub fn check_wronskian(data: &EndpointData) -> f64 {
    (data.c * data.s1 - data.c1 * data.s - 1.0).abs()
}

/// Integrates `C` and `S` with initial data `(1, 0)` and `(0, 1)` across the
/// whole edge.
pub fn integrate_fundamental(
    sigma: &GridFunction,
    lambda: f64,
    tol: &Tolerances,
) -> Result<EndpointData> {
    check_lambda(lambda)?;
    let states = integrate_pairs(sigma, lambda, tol, [1.0, 0.0, 0.0, 1.0], &[sigma.length()])?;
    let [c, c1, s, s1] = states[0];
    Ok(EndpointData {
        c,
        c1,
        s,
        s1,
        lambda,
    })
}

/// Samples `S(x, λ)` at `points` uniform nodes of the edge.
pub fn evaluate_solution_grid(
    sigma: &GridFunction,
    lambda: f64,
    points: usize,
    tol: &Tolerances,
) -> Result<Vec<(f64, f64)>> {
    check_lambda(lambda)?;
    if points == 0 {
        return Ok(Vec::new());
    }
    let l = sigma.length();
    let xs: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|i| {
                if i + 1 == points {
                    l
                } else {
                    l * i as f64 / (points - 1) as f64
                }
            })
            .collect()
    };
    let states = integrate_pairs(sigma, lambda, tol, [1.0, 0.0, 0.0, 1.0], &xs)?;
    Ok(xs
        .iter()
        .zip(states)
        .map(|(&x, st)| (x, if x == 0.0 { 0.0 } else { st[2] }))
        .collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() {
        Ok(())
    } else {
        Err(LassoError::InvalidInput(format!(
            "spectral parameter must be finite, got {lambda}"
        )))
    }
}

type State = [f64; 4];

#[inline]
fn rhs(sig: f64, lambda: f64, y: &State) -> State {
    let pot = sig * sig + lambda;
    [
        sig * y[0] + y[1],
        -sig * y[1] - pot * y[0],
        sig * y[2] + y[3],
        -sig * y[3] - pot * y[2],
    ]
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (a, k) in terms {
            acc += a * k[i];
        }
        *o += h * acc;
    }
    out
}

/// Integrates the 2×2 system for two initial conditions and returns the
/// state at each requested abscissa (sorted, inside `[0, l]`).
fn integrate_pairs(
    sigma: &GridFunction,
    lambda: f64,
    tol: &Tolerances,
    y0: State,
    outputs: &[f64],
) -> Result<Vec<State>> {
    let l = sigma.length();
    // Breakpoints: grid nodes merged with output points.
    let mut breaks: Vec<f64> = sigma.nodes().collect();
    breaks.extend(outputs.iter().copied().filter(|&x| x > 0.0 && x < l));
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * l);

    let freq = lambda.abs().sqrt() + sigma.sup_norm() + 1.0;
    let mut h = (0.05 / freq).min(sigma.step());
    let mut y = y0;
    let mut results = Vec::with_capacity(outputs.len());
    let mut out_iter = outputs.iter().peekable();
    while let Some(&&x_out) = out_iter.peek() {
        if x_out <= 0.0 {
            results.push(y0);
            out_iter.next();
        } else {
            break;
        }
    }

    for w in breaks.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        let cell = sigma.segment_of(0.5 * (xa + xb));
        let (v0, slope) = sigma.segment(cell);
        let x_cell = sigma.node(cell);
        let sig_at = |x: f64| v0 + slope * (x - x_cell);

        let mut x = xa;
        let mut k1 = rhs(sig_at(x), lambda, &y);
        let span = xb - xa;
        while x < xb {
            let clipped = x + h >= xb - 1e-12 * span;
            let step = if clipped { xb - x } else { h };
            let k2 = rhs(
                sig_at(x + C2 * step),
                lambda,
                &axpy(&y, &[(A21, &k1)], step),
            );
            let k3 = rhs(
                sig_at(x + C3 * step),
                lambda,
                &axpy(&y, &[(A31, &k1), (A32, &k2)], step),
            );
            let k4 = rhs(
                sig_at(x + C4 * step),
                lambda,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], step),
            );
            let k5 = rhs(
                sig_at(x + C5 * step),
                lambda,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], step),
            );
            let k6 = rhs(
                sig_at(x + step),
                lambda,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    step,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                step,
            );
            let k7 = rhs(sig_at(x + step), lambda, &y_new);

            let mut err_sq = 0.0;
            for i in 0..4 {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / 4.0).sqrt();
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h = 0.2 * step;
                if h < 1e-14 * (1.0 + x.abs()) {
                    return Err(LassoError::DivergedIntegration { x, lambda });
                }
                continue;
            }
            if err <= 1.0 {
                x = if clipped { xb } else { x + step };
                y = y_new;
                k1 = k7;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a clipped step says nothing about the controller's scale
                h = if clipped {
                    h.max(step * factor)
                } else {
                    step * factor
                };
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h < 1e-14 * (1.0 + x.abs()) {
                    return Err(LassoError::Stiffness { x, lambda });
                }
            }
        }
        while let Some(&&x_out) = out_iter.peek() {
            if (x_out - xb).abs() <= 1e-14 * l || x_out < xb {
                results.push(y);
                out_iter.next();
            } else {
                break;
            }
        }
    }
    while out_iter.next().is_some() {
        results.push(y);
    }
    Ok(results)
}
