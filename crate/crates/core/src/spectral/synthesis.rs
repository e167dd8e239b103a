//! Spectral synthesis of one-dimensional fBm,
//! `B_t = c ∫ (e^{itx} − 1) |x|^{−H−1/2} W(dx)`, on a log-spaced frequency
//! grid with Hermitian complex Gaussian weights.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Report, Status};
use crate::sampler::SamplePaths;
use crate::seeding::unit_rng;

/// Largest tolerated imaginary residue of a synthesized value.
const IMAG_RESIDUE_TOL: f64 = 1e-12;

/// Log-spaced positive frequencies, mirrored to the negatives when used.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqGrid {
    pub x_min: f64,
    pub x_max: f64,
    /// Positive nodes, ascending.
    pub nodes: Vec<f64>,
    /// Cell edges, `nodes.len() + 1` of them; cells meet at geometric midpoints.
    pub edges: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqGridDesc {
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_x_min() -> f64 {
    1e-4
}
fn default_x_max() -> f64 {
    1e4
}
fn default_n() -> usize {
    4096
}

impl Default for FreqGridDesc {
    fn default() -> Self {
        FreqGridDesc {
            x_min: default_x_min(),
            x_max: default_x_max(),
            n: default_n(),
        }
    }
}

impl FreqGridDesc {
    pub fn build(&self) -> Result<FreqGrid> {
        FreqGrid::new(self.x_min, self.x_max, self.n)
    }
}

impl FreqGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(Error::arg(format!(
                "frequency grid needs 0 < x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < 2 {
            return Err(Error::arg("frequency grid needs at least 2 nodes per sign"));
        }
        let step = (x_max / x_min).ln() / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|k| x_min * (step * k as f64).exp()).collect();
        let half = (0.5 * step).exp();
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(nodes[0] / half);
        for k in 0..n - 1 {
            edges.push((nodes[k] * nodes[k + 1]).sqrt());
        }
        edges.push(nodes[n - 1] * half);
        Ok(FreqGrid {
            x_min,
            x_max,
            nodes,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mass of `|x|^{−1−α} dx` on each positive cell, exactly:
    /// `(lo^{−α} − hi^{−α}) / α`. Negative cells carry the same masses.
    pub fn masses(&self, alpha: f64) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| (w[0].powf(-alpha) - w[1].powf(-alpha)) / alpha)
            .collect()
    }

    pub fn desc(&self) -> FreqGridDesc {
        FreqGridDesc {
            x_min: self.x_min,
            x_max: self.x_max,
            n: self.len(),
        }
    }
}

/// The discretized model shared by the sampler and its exact covariance.
struct GridModel {
    nodes: Vec<f64>,
    masses: Vec<f64>,
    /// Normalizing constant squared, fixing `Var(B_1) = 1` on this grid.
    c2: f64,
}

impl GridModel {
    fn new(hurst: f64, grid: &FreqGrid) -> Self {
        let masses = grid.masses(2.0 * hurst);
        let v1: f64 = grid
            .nodes
            .iter()
            .zip(&masses)
            .map(|(x, m)| 4.0 * m * (1.0 - x.cos()))
            .sum();
        GridModel {
            nodes: grid.nodes.clone(),
            masses,
            c2: 1.0 / v1,
        }
    }

    /// `Var(B_t − B_s)` of the grid model, a function of `|t − s|` only.
    fn increment_variance(&self, lag: f64) -> f64 {
        self.c2
            * self
                .nodes
                .iter()
                .zip(&self.masses)
                .map(|(x, m)| 8.0 * m * (0.5 * lag * x).sin().powi(2))
                .sum::<f64>()
    }
}

/// `Var(B_t − B_s)` of the synthesis on `grid`, exact for the discretized model.
pub fn grid_increment_variance(hurst: f64, grid: &FreqGrid, lag: f64) -> f64 {
    GridModel::new(hurst, grid).increment_variance(lag)
}

fn check_synth_args(hurst: f64, tgrid: &[f64], grid: &FreqGrid, n_paths: usize) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::arg(format!("H must lie in (0, 1), got {hurst}")));
    }
    if tgrid.is_empty() || n_paths == 0 {
        return Err(Error::arg("tgrid and n_paths must be non-empty"));
    }
    if tgrid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::arg("tgrid must contain finite nonnegative times"));
    }
    let t_max = tgrid.iter().copied().fold(0.0, f64::max);
    if t_max > 0.0 && (t_max * grid.x_min > 1e-2 || t_max * grid.x_max < 1e2) {
        return Err(Error::arg(format!(
            "frequency grid [{}, {}] does not resolve times up to {t_max}: need T·x_min ≤ 1e-2 and T·x_max ≥ 1e2",
            grid.x_min, grid.x_max
        )));
    }
    Ok(())
}

/// Paths of `B` at `tgrid`. Path `i` draws its cell weights from sub-seed
/// `(seed, i)`.
pub fn synth_fbm_spectral(
    hurst: f64,
    tgrid: &[f64],
    grid: &FreqGrid,
    n_paths: usize,
    seed: u64,
) -> Result<SamplePaths> {
    check_synth_args(hurst, tgrid, grid, n_paths)?;
    let model = GridModel::new(hurst, grid);
    let c = model.c2.sqrt();
    let n = grid.len();
    // e^{itx} − 1 for each (t, node)
    let phase: Vec<(f64, f64)> = tgrid
        .iter()
        .flat_map(|&t| {
            grid.nodes
                .iter()
                .map(move |&x| ((t * x).cos() - 1.0, (t * x).sin()))
        })
        .collect();
    let amp: Vec<f64> = model.masses.iter().map(|m| (0.5 * m).sqrt()).collect();
    let rows: Vec<Result<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_rng(seed, i as u64);
            let w: Vec<(f64, f64)> = amp
                .iter()
                .map(|a| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    (a * re, a * im)
                })
                .collect();
            tgrid
                .iter()
                .enumerate()
                .map(|(ti, _)| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for k in 0..n {
                        let (pr, pi) = phase[ti * n + k];
                        let (wr, wi) = w[k];
                        // positive node: (e^{itx}−1)·M; negative node: conjugate of it
                        let (ar, ai) = (pr * wr - pi * wi, pr * wi + pi * wr);
                        let (br, bi) = (pr * wr - pi * wi, -(pr * wi + pi * wr));
                        re += ar + br;
                        im += ai + bi;
                    }
                    if im.abs() > IMAG_RESIDUE_TOL {
                        return Err(Error::numeric(format!(
                            "spectral sum has imaginary residue {im:e}"
                        )));
                    }
                    Ok(c * re)
                })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(SamplePaths {
        values: DMatrix::from_fn(n_paths, tgrid.len(), |i, j| rows[i][j]),
        seed,
        design_size: tgrid.len(),
    })
}

fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

/// Synthesize, then check: `B_0 = 0` exactly, empirical covariance within
/// `cov_tol` of the fBm covariance, and every empirical increment variance
/// within three standard errors of the grid model's value at that lag.
pub fn spectral_synth_check(
    hurst: f64,
    tgrid: &[f64],
    grid: &FreqGrid,
    n_paths: usize,
    seed: u64,
    cov_tol: f64,
) -> Result<Report> {
    let paths = synth_fbm_spectral(hurst, tgrid, grid, n_paths, seed)?;
    let model = GridModel::new(hurst, grid);
    let x = &paths.values;
    let nf = n_paths as f64;
    let m = tgrid.len();
    let emp = (x.transpose() * x) / nf;

    let mut max_cov_err = 0.0f64;
    for j in 0..m {
        for k in 0..m {
            max_cov_err = max_cov_err.max((emp[(j, k)] - fbm_cov(hurst, tgrid[j], tgrid[k])).abs());
        }
    }
    let zero_ok = tgrid
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == 0.0)
        .all(|(j, _)| x.column(j).iter().all(|v| *v == 0.0));

    let mut max_inc_z = 0.0f64;
    for j in 0..m {
        for k in (j + 1)..m {
            let lag = (tgrid[k] - tgrid[j]).abs();
            let v = model.increment_variance(lag);
            let emp_v = (0..n_paths)
                .map(|i| (x[(i, k)] - x[(i, j)]).powi(2))
                .sum::<f64>()
                / nf;
            // sample second moment of a centred Gaussian: se = v √(2/n)
            let se = v * (2.0 / nf).sqrt();
            let z = if se > 0.0 {
                (emp_v - v).abs() / se
            } else if emp_v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_inc_z = max_inc_z.max(z);
        }
    }

    let mut report = Report::new("spectral-synthesis").with_seed(seed);
    report.stat("H", hurst);
    report.stat("max_cov_err", max_cov_err);
    report.stat("max_increment_z", max_inc_z);
    report.stat("grid_var_b1", model.increment_variance(1.0));
    report.stat("n_paths", nf);
    report.max_abs_diff = Some(max_cov_err);
    report.tolerance = Some(cov_tol);
    let mut ok = true;
    if max_cov_err > cov_tol {
        ok = false;
        report.detail(format!("max covariance error {max_cov_err:.5} exceeds {cov_tol}"));
    }
    if !zero_ok {
        ok = false;
        report.detail("B_0 is not identically zero");
    }
    if max_inc_z > 3.0 {
        ok = false;
        report.detail(format!("increment variance z-score {max_inc_z:.3} exceeds 3"));
    }
    report.set_status(if ok { Status::Pass } else { Status::Fail });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_masses_are_exact() {
        let g = FreqGrid::new(1e-2, 1e2, 64).unwrap();
        let alpha = 0.6;
        let total: f64 = g.masses(alpha).iter().sum();
        let lo = g.edges[0];
        let hi = *g.edges.last().unwrap();
        let exact = (lo.powf(-alpha) - hi.powf(-alpha)) / alpha;
        assert!((total / exact - 1.0).abs() < 1e-12);
        assert!(g.masses(alpha).iter().all(|m| *m > 0.0));
    }

    #[test]
    fn time_zero_is_exactly_zero_and_var_one_normalized() {
        let g = FreqGrid::new(1e-4, 1e4, 512).unwrap();
        let p = synth_fbm_spectral(0.4, &[0.0, 0.5, 1.0], &g, 8, 3).unwrap();
        assert!(p.values.column(0).iter().all(|v| *v == 0.0));
        assert!((grid_increment_variance(0.4, &g, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resolution_guard() {
        let g = FreqGrid::new(1e-1, 1e4, 64).unwrap();
        assert!(synth_fbm_spectral(0.5, &[0.0, 1.0], &g, 4, 0).is_err());
        let g = FreqGrid::new(1e-4, 10.0, 64).unwrap();
        assert!(synth_fbm_spectral(0.5, &[0.0, 1.0], &g, 4, 0).is_err());
        let g = FreqGrid::new(1e-4, 1e4, 64).unwrap();
        assert!(synth_fbm_spectral(0.5, &[-1.0, 1.0], &g, 4, 0).is_err());
    }

    #[test]
    fn grid_model_variance_approaches_power_law() {
        let g = FreqGrid::new(1e-4, 1e4, 4096).unwrap();
        for h in [0.3, 0.5, 0.7] {
            for lag in [0.1, 0.25, 0.5] {
                let v = grid_increment_variance(h, &g, lag);
                let target = lag.powf(2.0 * h);
                assert!((v - target).abs() < 5e-3, "H={h} lag={lag}: {v} vs {target}");
            }
        }
    }
}
