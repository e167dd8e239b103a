//! Monte-Carlo realizations of the integral-geometric set constructions
//! behind the Lévy fBm.
//!
//! *Chentsov.* Hyperplanes of `R^d` are parametrized by `(u, p) ∈ S^{d−1} × R`.
//! The hyperplane `{x : ⟨u, x⟩ = p}` separates `s` and `t` iff `p` lies
//! strictly between `⟨u, s⟩` and `⟨u, t⟩`, a band of `p`-length
//! `|⟨u, t − s⟩|`. Averaging over the sphere and calibrating by
//! `c_d = 1 / E|u_1|` gives a measure with `m_d(A_t △ A_s) = ‖t − s‖`.
//!
//! *Takenaka.* Balls `S_x = {(y, r) : ‖y − x‖ ≤ r}` carry the measure
//! `r^{2H−d−1} dy dr`. For a fixed centre `y` the `r`-section of
//! `S_t △ S_s` is `[r_min, r_max)` with `r_min, r_max` the smaller and larger
//! of `‖y − t‖, ‖y − s‖`, whose mass is
//! `(r_min^{2H−d} − r_max^{2H−d}) / (d − 2H)`. Only the `y`-integral is
//! estimated, by importance sampling. The result is proportional to
//! `‖t − s‖^{2H}`; no absolute constant is asserted.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::unit_rng;
use crate::stats::{loglog_fit, LineFit};

/// Samples per independently seeded chunk.
const CHUNK: usize = 4096;

/// Minimum sample count for an estimate with a usable standard error.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Scale of the Takenaka proposal; `‖t − s‖ + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_scale: Option<f64>,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed,
            proposal_scale: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::arg(format!(
                "n_samples must be at least {MIN_SAMPLES}, got {}",
                self.n_samples
            )));
        }
        if let Some(s) = self.proposal_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::arg(format!("proposal_scale must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    fn exact(value: f64, cfg: &McConfig) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            n_samples: cfg.n_samples,
            seed: cfg.seed,
        }
    }
}

fn check_points(d: usize, t: &[f64], s: &[f64]) -> Result<()> {
    if d < 1 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    if t.len() != d || s.len() != d {
        return Err(Error::arg(format!(
            "points must have dimension {d}, got {} and {}",
            t.len(),
            s.len()
        )));
    }
    if t.iter().chain(s).any(|x| !x.is_finite()) {
        return Err(Error::arg("points must be finite"));
    }
    Ok(())
}

/// Mean and standard error of `n` draws produced chunk-wise by `draw`.
/// Chunk `i` gets its own generator; partial sums are reduced in chunk order.
fn chunked_mean<F>(n: usize, seed: u64, draw: F) -> (f64, f64)
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = unit_rng(seed, c as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..len {
                let w = draw(&mut rng);
                sum += w;
                sum_sq += w * w;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn unit_vector(rng: &mut impl Rng, d: usize, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for x in out.iter_mut().take(d) {
            *x = rng.sample(StandardNormal);
            n2 += *x * *x;
        }
        if n2 > 1e-300 {
            let inv = 1.0 / n2.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// `E|u_1|` for `u` uniform on `S^{d−1}`:
/// `Γ(d/2) / (√π Γ((d+1)/2))`, via `a_{d+2} = a_d · d / (d + 1)`.
pub fn sphere_abs_first_moment(d: usize) -> f64 {
    assert!(d >= 1);
    let (mut a, mut k) = if d % 2 == 1 { (1.0, 1) } else { (2.0 / PI, 2) };
    while k < d {
        a *= k as f64 / (k + 1) as f64;
        k += 2;
    }
    a
}

/// Estimate of the Chentsov measure of the hyperplanes separating `s` and `t`.
pub fn chentsov_symdiff_measure(d: usize, t: &[f64], s: &[f64], cfg: &McConfig) -> Result<Estimate> {
    check_points(d, t, s)?;
    cfg.validate()?;
    let delta: Vec<f64> = t.iter().zip(s).map(|(a, b)| a - b).collect();
    if delta.iter().all(|x| *x == 0.0) {
        return Ok(Estimate::exact(0.0, cfg));
    }
    if d == 1 {
        // hyperplanes are points; the separating set is the interval between them
        return Ok(Estimate::exact(delta[0].abs(), cfg));
    }
    let calib = 1.0 / sphere_abs_first_moment(d);
    let (value, stderr) = chunked_mean(cfg.n_samples, cfg.seed, |rng| {
        let mut u = [0.0f64; 16];
        let mut heap;
        let u: &mut [f64] = if d <= 16 {
            &mut u[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        unit_vector(rng, d, u);
        let proj: f64 = u.iter().zip(&delta).map(|(a, b)| a * b).sum();
        calib * proj.abs()
    });
    Ok(Estimate {
        value,
        stderr,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    })
}

/// Surface area of `S^{d−1}`: `2 π^{d/2} / Γ(d/2)`.
fn sphere_area(d: usize) -> f64 {
    // Γ(d/2) by recursion from Γ(1) = 1 or Γ(1/2) = √π
    let (mut g, mut k) = if d % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < d {
        g *= k as f64 / 2.0;
        k += 2;
    }
    2.0 * PI.powf(d as f64 / 2.0) / g
}

/// Isotropic radial law around a centre: `ε = σ·u` with `u` beta-prime
/// `(2H, 1 − 2H)`. In `x`-space its density behaves like `ε^{2H−d}` at the
/// centre and `ε^{2H−d−1}` in the tail, the same two power laws as the
/// Takenaka integrand.
struct RadialLaw {
    d: usize,
    scale: f64,
    a: f64,
    gamma_a: Gamma<f64>,
    gamma_b: Gamma<f64>,
    /// `1 / (σ · B(2H, 1 − 2H) · |S^{d−1}|)`.
    norm: f64,
}

impl RadialLaw {
    fn new(d: usize, hurst: f64, scale: f64) -> Self {
        let a = 2.0 * hurst;
        let b = 1.0 - a;
        // B(a, 1 − a) = Γ(a)Γ(1 − a) = π / sin(πa)
        let beta = PI / (PI * a).sin();
        RadialLaw {
            d,
            scale,
            a,
            gamma_a: Gamma::new(a, 1.0).expect("shape 2H > 0"),
            gamma_b: Gamma::new(b, 1.0).expect("shape 1 − 2H > 0"),
            norm: 1.0 / (scale * beta * sphere_area(d)),
        }
    }

    fn sample_radius(&self, rng: &mut impl Rng) -> f64 {
        let x: f64 = self.gamma_a.sample(rng);
        let y: f64 = self.gamma_b.sample(rng);
        self.scale * x / y
    }

    /// Density in `x`-space at distance `eps` from the centre.
    fn density(&self, eps: f64) -> f64 {
        let u = eps / self.scale;
        // radial pdf (1/σ) u^{a−1}/((1+u) B), divided by |S^{d−1}| eps^{d−1}
        self.norm * u.powf(self.a - 1.0) / (1.0 + u) / eps.powi(self.d as i32 - 1)
    }
}

/// Importance-sampling estimate of the Takenaka measure `m_d^H(A_t △ A_s)`.
///
/// The proposal is an equal-weight mixture of three [`RadialLaw`]s centred at
/// `t`, `s` and `(t + s)/2`, all with scale `cfg.proposal_scale`. The
/// components at `t` and `s` cancel the integrable singularities of the
/// integrand there and the tails match, so importance weights stay bounded.
pub fn takenaka_symdiff_measure(
    d: usize,
    hurst: f64,
    t: &[f64],
    s: &[f64],
    cfg: &McConfig,
) -> Result<Estimate> {
    check_points(d, t, s)?;
    cfg.validate()?;
    if !(hurst > 0.0 && hurst < 0.5) {
        return Err(Error::arg(format!(
            "Takenaka measure needs H in (0, 1/2), got {hurst}"
        )));
    }
    let dist: f64 = t.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist == 0.0 {
        return Ok(Estimate::exact(0.0, cfg));
    }
    let scale = cfg.proposal_scale.unwrap_or(dist + 1.0);
    let law = RadialLaw::new(d, hurst, scale);
    let mid: Vec<f64> = t.iter().zip(s).map(|(a, b)| 0.5 * (a + b)).collect();
    let centres: [&[f64]; 3] = [t, s, &mid];
    let expo = 2.0 * hurst - d as f64;
    let denom = d as f64 - 2.0 * hurst;

    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        let mut dir = vec![0.0; d];
        let mut x = vec![0.0; d];
        loop {
            let c = centres[rng.random_range(0..3)];
            unit_vector(rng, d, &mut dir);
            let r = law.sample_radius(rng);
            for k in 0..d {
                x[k] = c[k] + r * dir[k];
            }
            let dt = distance(&x, t);
            let ds = distance(&x, s);
            let dm = distance(&x, &mid);
            let (rmin, rmax) = if dt < ds { (dt, ds) } else { (ds, dt) };
            let f = (rmin.powf(expo) - rmax.powf(expo)) / denom;
            let q = (law.density(dt) + law.density(ds) + law.density(dm)) / 3.0;
            let w = f / q;
            // a radius that underflows lands exactly on a centre; redraw
            if w.is_finite() {
                return w;
            }
        }
    };
    let (value, stderr) = chunked_mean(cfg.n_samples, cfg.seed, draw);
    Ok(Estimate {
        value,
        stderr,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// OLS fit of `ln value` against `ln distance`.
pub fn exponent_fit(pairs: &[(f64, Estimate)]) -> Result<LineFit> {
    if pairs.len() < 3 {
        return Err(Error::arg("exponent fit needs at least 3 points"));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(d, e)| (*d, e.value)).unzip();
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::arg("exponent fit needs positive estimates"));
    }
    loglog_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(v: f64) -> Estimate {
        Estimate {
            value: v,
            stderr: 0.0,
            n_samples: 1000,
            seed: 0,
        }
    }

    #[test]
    fn sphere_moments() {
        assert_eq!(sphere_abs_first_moment(1), 1.0);
        assert!((sphere_abs_first_moment(2) - 2.0 / PI).abs() < 1e-16);
        assert!((sphere_abs_first_moment(3) - 0.5).abs() < 1e-16);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert_eq!(sphere_area(1), 2.0);
    }

    #[test]
    fn chentsov_exact_cases() {
        let cfg = McConfig::new(1000, 1);
        let e = chentsov_symdiff_measure(3, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &cfg).unwrap();
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
        let e = chentsov_symdiff_measure(1, &[2.5], &[-1.0], &cfg).unwrap();
        assert_eq!((e.value, e.stderr), (3.5, 0.0));
    }

    #[test]
    fn chentsov_rejects_bad_config() {
        assert!(chentsov_symdiff_measure(2, &[1.0, 0.0], &[0.0, 0.0], &McConfig::new(999, 1)).is_err());
        assert!(chentsov_symdiff_measure(0, &[], &[], &McConfig::new(1000, 1)).is_err());
        assert!(chentsov_symdiff_measure(2, &[1.0], &[0.0, 0.0], &McConfig::new(1000, 1)).is_err());
    }

    #[test]
    fn takenaka_validation() {
        let cfg = McConfig::new(1000, 1);
        assert!(takenaka_symdiff_measure(2, 0.5, &[1.0, 0.0], &[0.0, 0.0], &cfg).is_err());
        assert!(takenaka_symdiff_measure(2, 0.0, &[1.0, 0.0], &[0.0, 0.0], &cfg).is_err());
        let e = takenaka_symdiff_measure(2, 0.25, &[1.0, 1.0], &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn radial_law_normalizes() {
        // ∫ density dx = ∫_0^∞ density(ε) |S^{d−1}| ε^{d−1} dε should be 1;
        // integrate in log ε with a plain trapezoid rule.
        for (d, h) in [(1usize, 0.25), (2, 0.25), (3, 0.1)] {
            let law = RadialLaw::new(d, h, 1.7);
            let (lo, hi, n) = (-60.0f64, 60.0f64, 200_000);
            let step = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                let e = (lo + i as f64 * step).exp();
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                total += w * law.density(e) * sphere_area(d) * e.powi(d as i32);
            }
            total *= step;
            assert!((total - 1.0).abs() < 1e-3, "d={d} H={h}: {total}");
        }
    }

    #[test]
    fn fit_examples() {
        let pairs: Vec<(f64, Estimate)> =
            [0.5, 1.0, 2.0, 4.0].iter().map(|&x| (x, est(f64::powf(x, 0.5)))).collect();
        let f = exponent_fit(&pairs).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);

        let pairs: Vec<(f64, Estimate)> = [0.5, 1.0, 2.0].iter().map(|&x| (x, est(3.0))).collect();
        assert!(exponent_fit(&pairs).unwrap().slope.abs() < 1e-15);

        let bad = vec![(1.0, est(1.0)), (2.0, est(0.0)), (3.0, est(1.0))];
        assert!(exponent_fit(&bad).is_err());
        assert!(exponent_fit(&bad[..2]).is_err());
    }
}
