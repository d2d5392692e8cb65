//! Entire-function helpers in `lambda` and closed-form trigonometric
//! integrals on `[0, 1]`.

/// `sin(rho * l) / rho` with `rho = sqrt(lambda)`, continued to `lambda <= 0`
/// as `sinh(kappa * l) / kappa`, `kappa = sqrt(-lambda)`.
pub fn sin_over_rho(lambda: f64, l: f64) -> f64 {
    let z = lambda * l * l;
    if z.abs() < 1e-8 {
        // rho * l < 1e-4: series in z = (rho l)^2
        l * (1.0 - z / 6.0 + z * z / 120.0)
    } else if lambda > 0.0 {
        let rho = lambda.sqrt();
        (rho * l).sin() / rho
    } else {
        let kappa = (-lambda).sqrt();
        (kappa * l).sinh() / kappa
    }
}

/// `cos(sqrt(lambda) * l)`, continued to `lambda <= 0` as `cosh`.
pub fn cos_rho(lambda: f64, l: f64) -> f64 {
    if lambda >= 0.0 {
        (lambda.sqrt() * l).cos()
    } else {
        ((-lambda).sqrt() * l).cosh()
    }
}

/// `rho * sin(rho * l)`, continued to `lambda <= 0` as `-kappa sinh(kappa l)`.
pub fn rho_sin_rho(lambda: f64, l: f64) -> f64 {
    if lambda >= 0.0 {
        let rho = lambda.sqrt();
        rho * (rho * l).sin()
    } else {
        let kappa = (-lambda).sqrt();
        -kappa * (kappa * l).sinh()
    }
}

/// `int_0^1 cos(w t) dt = sin(w) / w`.
pub fn cos_mean(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        1.0 - w * w / 6.0
    } else {
        w.sin() / w
    }
}

/// `int_0^1 sin(p t) sin(q t) dt`.
pub fn sin_sin(p: f64, q: f64) -> f64 {
    0.5 * (cos_mean(p - q) - cos_mean(p + q))
}

/// `int_0^1 cos(p t) cos(q t) dt`.
pub fn cos_cos(p: f64, q: f64) -> f64 {
    0.5 * (cos_mean(p - q) + cos_mean(p + q))
}

/// Moments `(int_0^1 cos(θs) ds, int_0^1 sin(θs) ds, int_0^1 s cos(θs) ds,
/// int_0^1 s sin(θs) ds)`.
fn unit_moments(theta: f64) -> [f64; 4] {
    if theta.abs() < 0.5 {
        // alternating series, |term ratio| <= θ²/2
        let (mut c0, mut s0, mut c1, mut s1) = (0.0, 0.0, 0.0, 0.0);
        // power = θ^k / k!
        let mut power = 1.0;
        for k in 0..24 {
            let kf = k as f64;
            let term0 = power / (kf + 1.0);
            let term1 = power / (kf + 2.0);
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                c0 += sign * term0;
                c1 += sign * term1;
            } else {
                s0 += sign * term0;
                s1 += sign * term1;
            }
            power *= theta / (kf + 1.0);
            if power.abs() < 1e-18 && k > 2 {
                break;
            }
        }
        [c0, s0, c1, s1]
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        [
            s / theta,
            (1.0 - c) / theta,
            (theta * s + c - 1.0) / t2,
            (s - theta * c) / t2,
        ]
    }
}

/// Exact `(int_0^l f(t) sin(rho t) dt, int_0^l f(t) cos(rho t) dt)` for the
/// piecewise-linear interpolant through `values` on a uniform grid.
pub fn piecewise_linear_sin_cos(values: &[f64], l: f64, rho: f64) -> (f64, f64) {
    let segments = values.len() - 1;
    let h = l / segments as f64;
    let theta = rho * h;
    let [c0, s0, c1, s1] = unit_moments(theta);
    let mut sin_acc = 0.0;
    let mut cos_acc = 0.0;
    for i in 0..segments {
        let fa = values[i];
        let df = values[i + 1] - fa;
        // int_0^1 (fa + df s) cos(θs) ds and the sine analogue
        let cc = fa * c0 + df * c1;
        let ss = fa * s0 + df * s1;
        let (sa, ca) = (rho * (i as f64 * h)).sin_cos();
        sin_acc += sa * cc + ca * ss;
        cos_acc += ca * cc - sa * ss;
    }
    (h * sin_acc, h * cos_acc)
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// Composite 4-point Gauss–Legendre rule over the grid segments of a
/// piecewise-linear function, integrating `f(t) * kernel(t)`.
pub fn piecewise_linear_gauss(values: &[f64], l: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let segments = values.len() - 1;
    let h = l / segments as f64;
    let mut acc = 0.0;
    for i in 0..segments {
        let a = i as f64 * h;
        for &(node, weight) in &GAUSS4 {
            let s = 0.5 * (node + 1.0);
            let f = values[i] + (values[i + 1] - values[i]) * s;
            acc += 0.5 * weight * f * kernel(a + s * h);
        }
    }
    acc * h
}

/// Composite 4-point Gauss–Legendre rule for a smooth `f` on `[0, l]`.
pub fn composite_gauss(f: impl Fn(f64) -> f64, l: f64, panels: usize) -> f64 {
    let h = l / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * h;
        for &(node, weight) in &GAUSS4 {
            acc += weight * f(mid + 0.5 * h * node);
        }
    }
    0.5 * h * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn entire_helpers_are_continuous_through_zero() {
        for &l in &[1.0, 2.0, 5.0] {
            // both sides of the series threshold agree with the closed forms
            let kappa = 1e-4_f64 / l;
            let left = sin_over_rho(-kappa * kappa, l);
            assert!((left - (kappa * l).sinh() / kappa).abs() < 1e-14 * l);
            let right = sin_over_rho(kappa * kappa, l);
            assert!((right - (kappa * l).sin() / kappa).abs() < 1e-14 * l);
            assert!((sin_over_rho(0.0, l) - l).abs() < 1e-15);
            let a = sin_over_rho(1e-7, l);
            let b = (1e-7_f64.sqrt() * l).sin() / 1e-7_f64.sqrt();
            assert!((a - b).abs() < 1e-12);
        }
        assert!((cos_rho(PI * PI, 1.0) + 1.0).abs() < 1e-15);
        assert!((cos_rho(-4.0, 1.0) - 2.0_f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn composite_gauss_integrates_oscillations() {
        let v = composite_gauss(|t| (40.0 * t).cos(), 1.0, 64);
        assert!((v - 40f64.sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_of_harmonic_sines() {
        for n in 1..6 {
            for k in 1..6 {
                let v = sin_sin(PI * n as f64, PI * k as f64);
                let expected = if n == k { 0.5 } else { 0.0 };
                assert!((v - expected).abs() < 1e-14, "{n} {k} {v}");
            }
        }
        assert!((cos_cos(0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_products_match_quadrature() {
        let pairs = [(0.3, 7.1), (2.5, 2.5), (11.0, 0.0), (1e-6, 3.0)];
        for &(p, q) in &pairs {
            let n = 20_000;
            let h = 1.0 / n as f64;
            let (mut ss, mut cc) = (0.0, 0.0);
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                ss += (p * t).sin() * (q * t).sin() * h;
                cc += (p * t).cos() * (q * t).cos() * h;
            }
            assert!((sin_sin(p, q) - ss).abs() < 1e-8);
            assert!((cos_cos(p, q) - cc).abs() < 1e-8);
        }
    }

    #[test]
    fn filon_segments_are_exact_for_linear_data() {
        // f(t) = 1 + 2t on [0, 1]; exact integrals against sin/cos of rho t
        let values: Vec<f64> = (0..=7).map(|i| 1.0 + 2.0 * i as f64 / 7.0).collect();
        for &rho in &[1e-3, 0.7, 3.0, 40.0] {
            let (s, c) = piecewise_linear_sin_cos(&values, 1.0, rho);
            let (sr, cr) = rho.sin_cos();
            let int_sin = (1.0 - cr) / rho;
            let int_cos = sr / rho;
            let int_t_sin = (sr - rho * cr) / (rho * rho);
            let int_t_cos = (rho * sr + cr - 1.0) / (rho * rho);
            let tol = if rho < 0.01 { 1e-9 } else { 1e-12 };
            assert!((s - (int_sin + 2.0 * int_t_sin)).abs() < tol, "{rho}");
            assert!((c - (int_cos + 2.0 * int_t_cos)).abs() < tol, "{rho}");
        }
    }

    #[test]
    fn unit_moments_series_matches_closed_form() {
        for &theta in &[0.49, -0.3, 0.05] {
            let series = unit_moments(theta);
            let (s, c) = f64::sin_cos(theta);
            let t2 = theta * theta;
            let closed = [
                s / theta,
                (1.0 - c) / theta,
                (theta * s + c - 1.0) / t2,
                (s - theta * c) / t2,
            ];
            for i in 0..4 {
                assert!((series[i] - closed[i]).abs() < 1e-12, "{theta} {i}");
            }
        }
    }
}
