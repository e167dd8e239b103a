//! Exact Gaussian sampling from Gram matrices and empirical covariance
//! comparison.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Gram;
use crate::report::{Report, Status};
use crate::seeding::unit_rng;

/// Jitter multipliers tried, in order, after a plain factorization fails.
pub const JITTER_LADDER: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Minimum number of paths for a covariance comparison.
pub const MIN_COMPARE_PATHS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub lower: DMatrix<f64>,
    /// Amount added to every diagonal entry before factorizing.
    pub jitter_applied: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn scaled(&self, c: f64) -> CholeskyFactor {
        CholeskyFactor {
            lower: &self.lower * c,
            jitter_applied: self.jitter_applied * c * c,
        }
    }
}

/// Lower-triangular `L` with `L Lᵀ = a`, accepting semidefinite input: a
/// pivot that vanishes to rounding is allowed when the rest of its column
/// vanishes too, and the column is then zero.
fn cholesky_semidefinite(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tiny = 1e-14 * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tiny || !d.is_finite() {
            return None;
        }
        if d <= tiny {
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > tiny.sqrt() * max_diag.sqrt() {
                    return None;
                }
            }
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    Some(l)
}

/// Cholesky factor of `g`, adding diagonal jitter `ε · trace / n` for `ε` on
/// [`JITTER_LADDER`] when the plain factorization fails.
pub fn cholesky_factor(g: &Gram) -> Result<CholeskyFactor> {
    if let Some(lower) = cholesky_semidefinite(&g.matrix) {
        return Ok(CholeskyFactor {
            lower,
            jitter_applied: 0.0,
        });
    }
    let n = g.design_size.max(1) as f64;
    let unit = g.trace().abs() / n;
    for eps in JITTER_LADDER {
        let jitter = eps * unit;
        if jitter == 0.0 {
            continue;
        }
        let mut m = g.matrix.clone();
        for i in 0..g.design_size {
            m[(i, i)] += jitter;
        }
        if let Some(lower) = cholesky_semidefinite(&m) {
            return Ok(CholeskyFactor {
                lower,
                jitter_applied: jitter,
            });
        }
    }
    Err(Error::Numeric {
        message: format!(
            "Gram matrix is indefinite beyond the jitter ladder (min eigenvalue {:e}, largest jitter {:e})",
            g.min_eig,
            JITTER_LADDER[JITTER_LADDER.len() - 1] * unit
        ),
        min_eig: Some(g.min_eig),
    })
}

/// Sampled realizations, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePaths {
    pub values: DMatrix<f64>,
    pub seed: u64,
    pub design_size: usize,
}

impl SamplePaths {
    pub fn n_paths(&self) -> usize {
        self.values.nrows()
    }
}

/// `n_paths` draws of `L z`; path `i` uses the generator for sub-seed `(seed, i)`.
pub fn sample_paths(factor: &CholeskyFactor, n_paths: usize, seed: u64) -> Result<SamplePaths> {
    if n_paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    let n = factor.dim();
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_rng(seed, i as u64);
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            (0..n)
                .map(|r| (0..=r).map(|k| factor.lower[(r, k)] * z[k]).sum())
                .collect()
        })
        .collect();
    Ok(SamplePaths {
        values: DMatrix::from_fn(n_paths, n, |i, j| rows[i][j]),
        seed,
        design_size: n,
    })
}

/// Compare the uncentred empirical covariance `(1/n) Σ x xᵀ` with `exact`.
///
/// Entry `(j, k)` gets the z-score `(Ĉ − C) / se` with
/// `se² = (C_jj C_kk + C_jk²) / n`, the exact variance of the estimator for
/// Gaussian data. Passes iff every `|z| ≤ 3`. Entries with `se = 0` pass only
/// on exact agreement.
pub fn empirical_cov_compare(samples: &SamplePaths, exact: &Gram) -> Result<Report> {
    compare_with_threshold(samples, exact, 3.0)
}

fn compare_with_threshold(samples: &SamplePaths, exact: &Gram, n_sigma: f64) -> Result<Report> {
    let n = samples.n_paths();
    if n < MIN_COMPARE_PATHS {
        return Err(Error::arg(format!(
            "covariance comparison needs at least {MIN_COMPARE_PATHS} paths, got {n}"
        )));
    }
    let k = exact.design_size;
    if samples.design_size != k {
        return Err(Error::arg(format!(
            "sample design size {} does not match Gram size {k}",
            samples.design_size
        )));
    }
    let x = &samples.values;
    let emp = (x.transpose() * x) / n as f64;
    let c = &exact.matrix;
    let nf = n as f64;
    let mut max_z = 0.0f64;
    let mut max_diff = 0.0f64;
    let mut worst = (0, 0);
    for j in 0..k {
        for l in j..k {
            let diff = emp[(j, l)] - c[(j, l)];
            let se = ((c[(j, j)] * c[(l, l)] + c[(j, l)] * c[(j, l)]).max(0.0) / nf).sqrt();
            let z = if se > 0.0 {
                diff.abs() / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_diff = max_diff.max(diff.abs());
            if z > max_z {
                max_z = z;
                worst = (j, l);
            }
        }
    }
    let mut report = Report::new("empirical-covariance").with_seed(samples.seed);
    report.max_abs_diff = Some(max_diff);
    report.tolerance = Some(n_sigma);
    report.stat("max_z", max_z);
    report.stat("n_paths", nf);
    report.detail(format!("largest z-score {max_z:.4} at entry ({}, {})", worst.0, worst.1));
    report.set_status(if max_z <= n_sigma { Status::Pass } else { Status::Fail });
    Ok(report)
}

/// Check that every coordinate's empirical mean is within three standard
/// errors `√(C_jj / n)` of zero.
pub fn empirical_mean_check(samples: &SamplePaths, exact: &Gram) -> Result<Report> {
    let n = samples.n_paths();
    if n < MIN_COMPARE_PATHS {
        return Err(Error::arg(format!(
            "mean check needs at least {MIN_COMPARE_PATHS} paths, got {n}"
        )));
    }
    if samples.design_size != exact.design_size {
        return Err(Error::arg("sample design size does not match Gram size"));
    }
    let nf = n as f64;
    let mut max_z = 0.0f64;
    for j in 0..samples.design_size {
        let mean = samples.values.column(j).sum() / nf;
        let se = (exact.matrix[(j, j)].max(0.0) / nf).sqrt();
        let z = if se > 0.0 {
            mean.abs() / se
        } else if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_z = max_z.max(z);
    }
    let mut report = Report::new("empirical-mean").with_seed(samples.seed);
    report.stat("max_z", max_z);
    report.judge(max_z, 3.0);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    fn gram(m: DMatrix<f64>) -> Gram {
        Gram::from_matrix(m).unwrap()
    }

    #[test]
    fn identity_factor() {
        let f = cholesky_factor(&gram(DMatrix::identity(3, 3))).unwrap();
        assert_eq!(f.lower, DMatrix::identity(3, 3));
        assert_eq!(f.jitter_applied, 0.0);
    }

    #[test]
    fn zero_matrix_gives_zero_paths() {
        let f = cholesky_factor(&gram(DMatrix::zeros(3, 3))).unwrap();
        assert_eq!(f.lower, DMatrix::zeros(3, 3));
        let p = sample_paths(&f, 10, 5).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rank_deficient_psd_factors_without_jitter() {
        // v vᵀ with a repeated coordinate
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let m = &v * v.transpose();
        let f = cholesky_factor(&gram(m.clone())).unwrap();
        let back = &f.lower * f.lower.transpose();
        assert!(frobenius(&(back - &m)) <= 1e-12 * frobenius(&m));
    }

    #[test]
    fn indefinite_matrix_is_numeric_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky_factor(&gram(m)) {
            Err(Error::Numeric { min_eig: Some(e), .. }) => assert!((e + 1.0).abs() < 1e-12),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn small_path_counts_rejected() {
        let g = gram(DMatrix::identity(2, 2));
        let f = cholesky_factor(&g).unwrap();
        let p = sample_paths(&f, 50, 1).unwrap();
        assert!(matches!(empirical_cov_compare(&p, &g), Err(Error::Argument(_))));
        assert!(sample_paths(&f, 0, 1).is_err());
    }

    #[test]
    fn zero_stderr_entries_need_exact_agreement() {
        let g = gram(DMatrix::zeros(2, 2));
        let p = SamplePaths {
            values: DMatrix::from_element(100, 2, 1e-3),
            seed: 0,
            design_size: 2,
        };
        assert!(!empirical_cov_compare(&p, &g).unwrap().pass);
    }
}
