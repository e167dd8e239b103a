//! Variograms on coordinate vectors and the Schoenberg test: `Φ` is
//! conditionally negative definite iff `exp(−tΦ)` is positive definite for
//! every `t > 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::min_eigenvalue;
use crate::measure_space::MeasureSpace;
use crate::report::{Report, Status};

pub const MAX_DESIGN: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum Variogram {
    Zero,
    /// `‖u‖^α`, Euclidean.
    Power { alpha: f64 },
    /// `(Σ w_i u_i²)^{α/2}`: the `α`-th power of a weighted L² norm.
    WeightedPower { weights: Vec<f64>, alpha: f64 },
}

impl Variogram {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::arg(format!("variogram exponent must be positive, got {alpha}")));
        }
        Ok(Variogram::Power { alpha })
    }

    /// The variogram of a kernel family. `l2fbm` acts on coefficient vectors
    /// of its own space; `mpfbm` needs `embedding`, the space whose indicator
    /// vectors stand in for the rectangles (`λ(A △ B) = ‖1_A − 1_B‖²`).
    pub fn from_kernel(kernel: &Kernel, embedding: Option<&MeasureSpace>) -> Result<Self> {
        match kernel {
            Kernel::Fbm1d { hurst } | Kernel::Levy { hurst } => Ok(Variogram::Power { alpha: 2.0 * hurst }),
            Kernel::CustomVariogram { alpha } => Ok(Variogram::Power { alpha: *alpha }),
            Kernel::L2Fbm { hurst, space, .. } => Ok(Variogram::WeightedPower {
                weights: space.weights().to_vec(),
                alpha: 4.0 * hurst,
            }),
            Kernel::MpFbm { hurst, .. } => match embedding {
                Some(space) => Ok(Variogram::WeightedPower {
                    weights: space.weights().to_vec(),
                    alpha: 4.0 * hurst,
                }),
                None => Err(Error::arg("mpfbm variogram needs an indicator embedding space")),
            },
            Kernel::Sheet { .. } => Err(Error::arg(
                "the sheet covariance is not of variogram form",
            )),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Variogram::Zero => None,
            Variogram::Power { alpha } | Variogram::WeightedPower { alpha, .. } => Some(*alpha),
        }
    }

    /// `Φ(a − b)`.
    pub fn eval_diff(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::arg("variogram arguments differ in dimension"));
        }
        let sq = match self {
            Variogram::Zero => return Ok(0.0),
            Variogram::Power { .. } => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(),
            Variogram::WeightedPower { weights, .. } => {
                if weights.len() != a.len() {
                    return Err(Error::arg("variogram argument does not match the weight vector"));
                }
                a.iter()
                    .zip(b)
                    .zip(weights)
                    .map(|((x, y), w)| w * (x - y) * (x - y))
                    .sum::<f64>()
            }
        };
        Ok(sq.powf(self.alpha().unwrap_or(0.0) / 2.0))
    }
}

/// For each `t`, the smallest eigenvalue of `exp(−t Φ(ξ_i − ξ_j))`; passes iff
/// all are `≥ −1e-10 · n`.
pub fn schoenberg_check(phi: &Variogram, design: &[Vec<f64>], t_list: &[f64]) -> Result<Report> {
    let n = design.len();
    if n == 0 || n > MAX_DESIGN {
        return Err(Error::arg(format!("design must have 1..={MAX_DESIGN} points, got {n}")));
    }
    if t_list.is_empty() || t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::arg("t_list must be non-empty and positive"));
    }
    let mut phis = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = phi.eval_diff(&design[i], &design[j])?;
            phis[(i, j)] = v;
            phis[(j, i)] = v;
        }
    }
    let tol = -1e-10 * n as f64;
    let mut report = Report::new("schoenberg");
    if let Some(a) = phi.alpha() {
        report.stat("alpha", a);
    }
    let mut worst = f64::INFINITY;
    for &t in t_list {
        let g = phis.map(|v: f64| (-t * v).exp());
        let e = min_eigenvalue(&g);
        report.detail(format!("t={t} min_eig={e:e}"));
        worst = worst.min(e);
    }
    report.stat("min_eig", worst);
    report.tolerance = Some(-tol);
    report.set_status(if worst >= tol { Status::Pass } else { Status::Fail });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn zero_variogram_is_rank_one() {
        let r = schoenberg_check(&Variogram::Zero, &line(8), &[1.0]).unwrap();
        assert!(r.pass);
        assert!(r.stats["min_eig"].abs() < 1e-12);
    }

    #[test]
    fn sheet_has_no_variogram() {
        let k = Kernel::sheet(vec![0.5, 0.5]).unwrap();
        assert!(Variogram::from_kernel(&k, None).is_err());
    }

    #[test]
    fn design_limit() {
        assert!(schoenberg_check(&Variogram::Zero, &line(129), &[1.0]).is_err());
        assert!(schoenberg_check(&Variogram::Zero, &line(3), &[0.0]).is_err());
    }
}
