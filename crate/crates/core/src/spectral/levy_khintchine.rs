//! The pure-jump Lévy–Khintchine integral of the symmetric stable measure
//! in one dimension,
//!
//! ```text
//! I_α(ξ) = 2 ∫_R (1 − cos ξx) |x|^{−1−α} dx = 4 ∫_0^∞ (1 − cos ξx) x^{−1−α} dx,
//! ```
//!
//! evaluated in `x` (not in `u = ξx`, which would make the scaling law
//! `I_α(cξ) = c^α I_α(ξ)` hold by construction) by two independent schemes.
//!
//! Scheme A splits at `x = 1`. On `[0, 1]` the substitution `x = v^{1/(2−α)}`
//! turns the integrand into the bounded `(1 − cos ξx)/x² / (2 − α)`, handled
//! by adaptive Gauss–Kronrod. The tail uses `1/α − Re ∫_1^∞ e^{iξx} x^{−1−α} dx`
//! with the oscillatory integral rotated onto the ray `x = 1 + iy/ξ`, where it
//! decays like `e^{−y}`.
//!
//! Scheme B integrates the singular `[0, 1]` part with tanh-sinh in `x`, the
//! range `[1, X]` with Gauss–Legendre panels of one half-period each, and the
//! remainder beyond `X` by its asymptotic expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{adaptive_gk, gauss_legendre, tanh_sinh};
use crate::error::{Error, Result};
use crate::report::{Report, Status};

/// Tolerance of the scaling and constancy checks.
pub const SCALING_TOL: f64 = 1e-6;
/// Tolerance of the agreement between the two quadrature schemes.
pub const DUAL_TOL: f64 = 1e-8;

fn check_args(alpha: f64, xi: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::arg(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::arg(format!("xi must be finite and nonzero, got {xi}")));
    }
    Ok(())
}

/// `(1 − cos y) / x²` with `y = ξx`, as `(ξ²/2) sinc²(y/2)`.
fn one_minus_cos_over_sq(xi: f64, x: f64) -> f64 {
    let half = 0.5 * xi * x;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    0.5 * xi * xi * sinc * sinc
}

/// Scheme A. `quad_tol` is the relative tolerance of every sub-integral.
pub fn lk_integral(alpha: f64, xi: f64, quad_tol: f64) -> Result<f64> {
    check_args(alpha, xi)?;
    let xi = xi.abs();
    let p = 1.0 / (2.0 - alpha);
    let head = adaptive_gk(
        |v| {
            let x = v.powf(p);
            p * one_minus_cos_over_sq(xi, x)
        },
        0.0,
        1.0,
        quad_tol,
        0.0,
    )?;
    let beta = 1.0 + alpha;
    // ∫_1^∞ e^{iξx} x^{−β} dx = (i/ξ) e^{iξ} ∫_0^∞ e^{−y} (1 + iy/ξ)^{−β} dy
    let along_ray = |y: f64, part: fn(Complex64) -> f64| -> f64 {
        let z = Complex64::new(1.0, y / xi).powf(-beta);
        part(z) * (-y).exp()
    };
    let re = adaptive_gk(|y| along_ray(y, |z| z.re), 0.0, 60.0, quad_tol, 1e-300)?;
    let im = adaptive_gk(|y| along_ray(y, |z| z.im), 0.0, 60.0, quad_tol, 1e-300)?;
    let osc = Complex64::new(0.0, 1.0 / xi) * Complex64::from_polar(1.0, xi) * Complex64::new(re, im);
    let tail = 1.0 / alpha - osc.re;
    Ok(4.0 * (head + tail))
}

/// Scheme B, independent of scheme A in every sub-integral.
pub fn lk_integral_alt(alpha: f64, xi: f64) -> Result<f64> {
    check_args(alpha, xi)?;
    let xi = xi.abs();
    let beta = 1.0 + alpha;
    let head = tanh_sinh(
        |x, _, _| one_minus_cos_over_sq(xi, x) * x.powf(1.0 - alpha),
        0.0,
        1.0,
        1e-14,
    )?;

    let half_period = PI / xi;
    let panels = ((1000.0 / xi) / half_period).ceil().max(8.0) as usize;
    let x_end = 1.0 + panels as f64 * half_period;
    let (nodes, weights) = gauss_legendre(24);
    let mut body = 0.0;
    for k in 0..panels {
        let lo = 1.0 + k as f64 * half_period;
        let c = lo + 0.5 * half_period;
        let h = 0.5 * half_period;
        let mut s = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let x = c + h * t;
            let sn = (0.5 * xi * x).sin();
            s += w * 2.0 * sn * sn * x.powf(-beta);
        }
        body += s * h;
    }

    // ∫_X^∞ e^{iξx} x^{−β} dx ~ −e^{iξX} Σ_k (β)_k X^{−β−k} / (iξ)^{k+1}
    let i_xi = Complex64::new(0.0, xi);
    let mut series = Complex64::new(0.0, 0.0);
    let mut rising = 1.0;
    let mut denom = i_xi;
    for k in 0..40 {
        let term = rising * x_end.powf(-beta - k as f64) / denom;
        series += term;
        if term.norm() < 1e-20 * series.norm() {
            break;
        }
        rising *= beta + k as f64;
        denom *= i_xi;
    }
    let osc = -Complex64::from_polar(1.0, xi * x_end) * series;
    let remainder = x_end.powf(-alpha) / alpha - osc.re;
    Ok(4.0 * (head + body + remainder))
}

/// `I_α(1)` in closed form: `−4 Γ(−α) cos(πα/2)`, or `2π` at `α = 1`.
pub fn lk_constant(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        return 2.0 * PI;
    }
    -4.0 * statrs::function::gamma::gamma(-alpha) * (PI * alpha / 2.0).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkRow {
    pub xi: f64,
    pub integral: f64,
    pub integral_doubled: f64,
    pub integral_alt: f64,
}

/// Scaling check `I(2ξ)/I(ξ) = 2^α`, constancy of `I(ξ)/|ξ|^α` across
/// `xi_list`, and agreement of the two schemes.
pub fn lk_scaling_check(alpha: f64, xi_list: &[f64], quad_tol: f64) -> Result<Report> {
    if !(quad_tol >= 1e-10) {
        return Err(Error::arg(format!("quad_tol must be at least 1e-10, got {quad_tol}")));
    }
    if xi_list.is_empty() {
        return Err(Error::arg("xi_list must be non-empty"));
    }
    let mut rows = Vec::with_capacity(xi_list.len());
    for &xi in xi_list {
        rows.push(LkRow {
            xi,
            integral: lk_integral(alpha, xi, quad_tol)?,
            integral_doubled: lk_integral(alpha, 2.0 * xi, quad_tol)?,
            integral_alt: lk_integral_alt(alpha, xi)?,
        });
    }
    let target = 2f64.powf(alpha);
    let ratio_err = rows
        .iter()
        .map(|r| (r.integral_doubled / r.integral / target - 1.0).abs())
        .fold(0.0, f64::max);
    let consts: Vec<f64> = rows.iter().map(|r| r.integral / r.xi.abs().powf(alpha)).collect();
    let mean = consts.iter().sum::<f64>() / consts.len() as f64;
    let const_err = consts.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    let dual_err = rows
        .iter()
        .map(|r| ((r.integral - r.integral_alt) / r.integral).abs())
        .fold(0.0, f64::max);
    let analytic = lk_constant(alpha);
    let analytic_err = (mean / analytic - 1.0).abs();

    let mut report = Report::new("levy-khintchine-scaling");
    report.stat("alpha", alpha);
    report.stat("ratio_rel_err", ratio_err);
    report.stat("constant_rel_spread", const_err);
    report.stat("dual_rel_err", dual_err);
    report.stat("constant", mean);
    report.stat("constant_closed_form", analytic);
    report.stat("closed_form_rel_err", analytic_err);
    report.max_abs_diff = Some(ratio_err.max(const_err));
    report.tolerance = Some(SCALING_TOL);
    for r in &rows {
        report.detail(format!(
            "xi={} I={:.15e} I(2xi)={:.15e} I_alt={:.15e}",
            r.xi, r.integral, r.integral_doubled, r.integral_alt
        ));
    }
    let ok = ratio_err <= SCALING_TOL
        && const_err <= SCALING_TOL
        && dual_err <= DUAL_TOL
        && analytic_err <= DUAL_TOL;
    if !ok {
        report.detail("scaling, constancy, dual-scheme or closed-form agreement out of tolerance");
    }
    report.set_status(if ok { Status::Pass } else { Status::Fail });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_one_constant_is_two_pi() {
        let a = lk_integral(1.0, 1.0, 1e-12).unwrap();
        let b = lk_integral_alt(1.0, 1.0).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-9, "{a}");
        assert!((b - 2.0 * PI).abs() < 1e-9, "{b}");
    }

    #[test]
    fn scaling_holds_for_several_alphas() {
        for alpha in [0.5, 1.0, 1.5] {
            let r = lk_scaling_check(alpha, &[0.5, 1.0, 3.0], 1e-10).unwrap();
            assert!(r.pass, "{}", r.to_json());
        }
    }

    #[test]
    fn argument_validation() {
        assert!(lk_integral(2.0, 1.0, 1e-10).is_err());
        assert!(lk_integral(1.0, 0.0, 1e-10).is_err());
        assert!(lk_scaling_check(1.0, &[1.0], 1e-12).is_err());
    }
}
