//! Simulated Gaussian random measures on a finite symmetric partition of
//! the line: zero mean, finite additivity, Hermitian symmetry and
//! `E(M(A) conj M(B)) = m(A ∩ B)`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Report, Status};
use crate::seeding::unit_rng;

pub const MIN_REPS: usize = 1000;

/// A positive cell `[lo, hi)` with its control mass; its mirror `(−hi, −lo]`
/// carries the same mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

fn validate(cells: &[Cell]) -> Result<()> {
    if cells.len() < 2 {
        return Err(Error::arg("a random measure needs at least 2 cells"));
    }
    for c in cells {
        if !(c.lo >= 0.0 && c.hi > c.lo && c.hi.is_finite()) {
            return Err(Error::arg(format!("invalid cell [{}, {})", c.lo, c.hi)));
        }
        if !(c.mass > 0.0 && c.mass.is_finite()) {
            return Err(Error::arg(format!("cell mass must be positive, got {}", c.mass)));
        }
    }
    let mut sorted: Vec<&Cell> = cells.iter().collect();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    if sorted.windows(2).any(|w| w[1].lo < w[0].hi) {
        return Err(Error::arg("cells overlap"));
    }
    Ok(())
}

/// One realization: a complex Gaussian value per positive cell with
/// `E|M|² = mass`; negative cells are conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRandomMeasure {
    pub cells: Vec<Cell>,
    pub values: Vec<Complex64>,
    pub seed: u64,
}

impl DiscreteRandomMeasure {
    /// Realization `index` of the family seeded by `seed`.
    pub fn sample(cells: &[Cell], seed: u64, index: u64) -> Result<Self> {
        validate(cells)?;
        Ok(Self::sample_unchecked(cells, seed, index))
    }

    fn sample_unchecked(cells: &[Cell], seed: u64, index: u64) -> Self {
        let mut rng = unit_rng(seed, index);
        let values = cells
            .iter()
            .map(|c| {
                let a = (0.5 * c.mass).sqrt();
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        DiscreteRandomMeasure {
            cells: cells.to_vec(),
            values,
            seed,
        }
    }

    /// `M` of the union of the positive cells listed in `set`.
    pub fn measure(&self, set: &[usize]) -> Complex64 {
        set.iter().map(|&k| self.values[k]).sum()
    }

    /// `M` of the mirror image of the union of `set`.
    pub fn measure_mirrored(&self, set: &[usize]) -> Complex64 {
        set.iter().map(|&k| self.values[k].conj()).sum()
    }
}

/// Statistical test of the defining properties over `n_reps` realizations.
///
/// * additivity `M(A ∪ B) = M(A) + M(B)` for the split of all cells into two
///   halves, to `1e-12` relative, and `M(−A) = conj M(A)` exactly;
/// * each cell's real and imaginary mean within `3 √(m / 2n)` of zero;
/// * `E|M(A)|²` within `3 m(A) √(2/n)` of `m(A)` per cell;
/// * for disjoint neighbours, empirical correlation within `3/√n` of zero;
/// * for overlapping unions `A = {0, 1}`, `B = {1, 2}` (when 3+ cells),
///   `|mean M(A) conj M(B) − m(A ∩ B)| ≤ 3 √(m(A) m(B) / n)`.
pub fn simulate_random_measure(cells: &[Cell], n_reps: usize, seed: u64) -> Result<Report> {
    validate(cells)?;
    if n_reps < MIN_REPS {
        return Err(Error::arg(format!("n_reps must be at least {MIN_REPS}, got {n_reps}")));
    }
    let k = cells.len();
    let all: Vec<usize> = (0..k).collect();
    let (left, right) = all.split_at(k / 2);

    let reps: Vec<DiscreteRandomMeasure> = (0..n_reps)
        .into_par_iter()
        .map(|i| DiscreteRandomMeasure::sample_unchecked(cells, seed, i as u64))
        .collect();

    let mut additivity_err = 0.0f64;
    let mut mirror_ok = true;
    for r in &reps {
        let whole = r.measure(&all);
        let parts = r.measure(left) + r.measure(right);
        let scale = r.values.iter().map(|v| v.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
        additivity_err = additivity_err.max((whole - parts).norm() / scale);
        mirror_ok &= r.measure_mirrored(&all) == whole.conj();
    }

    let nf = n_reps as f64;
    let mut mean_z = 0.0f64;
    let mut second_z = 0.0f64;
    for (j, c) in cells.iter().enumerate() {
        let mean: Complex64 = reps.iter().map(|r| r.values[j]).sum::<Complex64>() / nf;
        let se = (c.mass / (2.0 * nf)).sqrt();
        mean_z = mean_z.max(mean.re.abs() / se).max(mean.im.abs() / se);
        let second = reps.iter().map(|r| r.values[j].norm_sqr()).sum::<f64>() / nf;
        second_z = second_z.max((second - c.mass).abs() / (c.mass * (2.0 / nf).sqrt()));
    }

    let mut corr_z = 0.0f64;
    for j in 0..k - 1 {
        let cross: Complex64 = reps
            .iter()
            .map(|r| r.values[j] * r.values[j + 1].conj())
            .sum::<Complex64>()
            / nf;
        let rho = cross.norm() / (cells[j].mass * cells[j + 1].mass).sqrt();
        corr_z = corr_z.max(rho / (1.0 / nf.sqrt()));
    }

    let mut overlap_z = 0.0f64;
    if k >= 3 {
        let a = [0usize, 1];
        let b = [1usize, 2];
        let m_a = cells[0].mass + cells[1].mass;
        let m_b = cells[1].mass + cells[2].mass;
        let m_ab = cells[1].mass;
        let cross: Complex64 = reps
            .iter()
            .map(|r| r.measure(&a) * r.measure(&b).conj())
            .sum::<Complex64>()
            / nf;
        overlap_z = (cross - m_ab).norm() / (m_a * m_b / nf).sqrt();
    }

    let mut report = Report::new("random-measure").with_seed(seed);
    report.stat("additivity_rel_err", additivity_err);
    report.stat("max_mean_z", mean_z);
    report.stat("max_second_moment_z", second_z);
    report.stat("max_disjoint_corr_z", corr_z);
    report.stat("overlap_z", overlap_z);
    report.stat("n_reps", nf);
    let mut ok = true;
    if additivity_err > 1e-12 {
        ok = false;
        report.detail(format!("additivity error {additivity_err:e}"));
    }
    if !mirror_ok {
        ok = false;
        report.detail("Hermitian symmetry violated");
    }
    for (name, z) in [
        ("mean", mean_z),
        ("second moment", second_z),
        ("disjoint correlation", corr_z),
        ("overlap covariance", overlap_z),
    ] {
        if z > 3.0 {
            ok = false;
            report.detail(format!("{name} z-score {z:.3} exceeds 3"));
        }
    }
    report.set_status(if ok { Status::Pass } else { Status::Fail });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells() -> Vec<Cell> {
        vec![
            Cell { lo: 0.0, hi: 1.0, mass: 1.0 },
            Cell { lo: 1.0, hi: 2.0, mass: 0.5 },
            Cell { lo: 2.0, hi: 4.0, mass: 2.0 },
        ]
    }

    #[test]
    fn additivity_is_exact_by_summation() {
        let m = DiscreteRandomMeasure::sample(&cells(), 9, 0).unwrap();
        let diff = m.measure(&[0, 1]) - m.measure(&[0]) - m.measure(&[1]);
        assert_eq!(diff, Complex64::new(0.0, 0.0));
        assert_eq!(m.measure_mirrored(&[2]), m.measure(&[2]).conj());
    }

    #[test]
    fn invalid_partitions_rejected() {
        let mut c = cells();
        c[1].lo = 0.5;
        assert!(simulate_random_measure(&c, 1000, 0).is_err());
        assert!(simulate_random_measure(&cells()[..1], 1000, 0).is_err());
        assert!(simulate_random_measure(&cells(), 999, 0).is_err());
    }
}
