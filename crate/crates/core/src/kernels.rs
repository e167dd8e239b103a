//! Covariance kernels of the fractional-Brownian family.
//!
//! All families except the sheet are of variogram form
//! `C(a, b) = ½(Φ(a) + Φ(b) − Φ(a − b))` with `Φ(0) = 0`:
//!
//! | family             | index             | `Φ(u)`                       |
//! |--------------------|-------------------|------------------------------|
//! | `fbm1d`, `levy`    | points of `R^d`   | `‖u‖^{2H}`                   |
//! | `l2fbm`            | `L²(T, m)`        | `m(u²)^{2H} = ‖u‖_m^{4H}`    |
//! | `mpfbm`            | corners in `R_+^d`| `λ([0,s] △ [0,t])^{2H}`      |
//! | `custom_variogram` | points of `R^d`   | `‖u‖^α`                      |
//!
//! The fractional Brownian sheet is the tensor product of one-dimensional
//! fBm kernels, one Hurst exponent per axis.
//!
//! Self-similarity orders follow from these exponents. For `l2fbm` with
//! kernel parameter `H`, dilation `f ↦ a f` scales the variance by `a^{4H}`
//! (order `2H`), and a norm-scaling map with squared operator norm `ρ`
//! scales it by `ρ^{2H}` (order `H`).

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::linalg;
use crate::measure_space::{l2_dot, rect_measures, L2Vec, MeasureSpace, Rect, SpaceDesc};

/// Anything that can serve as the covariance of a centred process.
pub trait Covariance: Sync {
    fn cov(&self, a: &Index, b: &Index) -> Result<f64>;

    /// `E[(X_a − X_b)(X_c − X_d)]`.
    fn increment_cov(&self, a: &Index, b: &Index, c: &Index, d: &Index) -> Result<f64> {
        Ok(self.cov(a, c)? - self.cov(a, d)? - self.cov(b, c)? + self.cov(b, d)?)
    }

    fn label(&self) -> String;

    /// How a pair `(a, b)` forms an increment in stationarity checks.
    fn increment_kind(&self) -> IncrementKind {
        IncrementKind::Difference
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncrementKind {
    /// `X_a − X_b`, shifted by adding `h` to both indices.
    Difference,
    /// The rectangular increment `Δ_{[b, a]} X` over the box with lower
    /// corner `b` and upper corner `a` (sheet fields).
    Rectangle,
    /// The index set is not a vector space.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Fbm1d {
        hurst: f64,
    },
    Levy {
        hurst: f64,
    },
    Sheet {
        hurst: Vec<f64>,
    },
    MpFbm {
        hurst: f64,
        experimental: bool,
    },
    L2Fbm {
        hurst: f64,
        space: Arc<MeasureSpace>,
        experimental: bool,
    },
    CustomVariogram {
        alpha: f64,
    },
}

fn check_open_unit(h: f64, what: &str) -> Result<()> {
    if h.is_finite() && h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("{what}: Hurst parameter must lie in (0, 1), got {h}")))
    }
}

fn check_half(h: f64, experimental: bool, what: &str) -> Result<()> {
    if experimental {
        return check_open_unit(h, what);
    }
    if h.is_finite() && h > 0.0 && h <= 0.5 {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "{what}: Hurst parameter must lie in (0, 1/2] (set the experimental flag for H > 1/2), got {h}"
        )))
    }
}

impl Kernel {
    pub fn fbm1d(hurst: f64) -> Result<Self> {
        check_open_unit(hurst, "fbm1d")?;
        Ok(Kernel::Fbm1d { hurst })
    }

    pub fn levy(hurst: f64) -> Result<Self> {
        check_open_unit(hurst, "levy")?;
        Ok(Kernel::Levy { hurst })
    }

    pub fn sheet(hurst: Vec<f64>) -> Result<Self> {
        if hurst.is_empty() {
            return Err(Error::arg("sheet: Hvec must be non-empty"));
        }
        for &h in &hurst {
            check_open_unit(h, "sheet")?;
        }
        Ok(Kernel::Sheet { hurst })
    }

    pub fn mpfbm(hurst: f64) -> Result<Self> {
        check_half(hurst, false, "mpfbm")?;
        Ok(Kernel::MpFbm { hurst, experimental: false })
    }

    pub fn mpfbm_experimental(hurst: f64) -> Result<Self> {
        check_half(hurst, true, "mpfbm")?;
        Ok(Kernel::MpFbm { hurst, experimental: true })
    }

    pub fn l2fbm(space: Arc<MeasureSpace>, hurst: f64) -> Result<Self> {
        check_half(hurst, false, "l2fbm")?;
        Ok(Kernel::L2Fbm { hurst, space, experimental: false })
    }

    pub fn l2fbm_experimental(space: Arc<MeasureSpace>, hurst: f64) -> Result<Self> {
        check_half(hurst, true, "l2fbm")?;
        Ok(Kernel::L2Fbm { hurst, space, experimental: true })
    }

    pub fn custom_variogram(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::arg(format!("custom_variogram: alpha must be positive, got {alpha}")));
        }
        Ok(Kernel::CustomVariogram { alpha })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Kernel::Fbm1d { .. } => "fbm1d",
            Kernel::Levy { .. } => "levy",
            Kernel::Sheet { .. } => "sheet",
            Kernel::MpFbm { .. } => "mpfbm",
            Kernel::L2Fbm { .. } => "l2fbm",
            Kernel::CustomVariogram { .. } => "custom_variogram",
        }
    }

    /// Exponent `β` such that `Φ(u) = ‖u‖^β`, for the families whose
    /// variogram is a power of a norm on a vector space.
    pub fn norm_exponent(&self) -> Option<f64> {
        match self {
            Kernel::Fbm1d { hurst } | Kernel::Levy { hurst } => Some(2.0 * hurst),
            Kernel::L2Fbm { hurst, .. } => Some(4.0 * hurst),
            Kernel::CustomVariogram { alpha } => Some(*alpha),
            Kernel::Sheet { .. } | Kernel::MpFbm { .. } => None,
        }
    }

    fn check_index(&self, a: &Index) -> Result<()> {
        match (self, a) {
            (Kernel::Fbm1d { .. }, Index::Point(p)) if p.len() == 1 => Ok(()),
            (Kernel::Fbm1d { .. }, _) => Err(Error::arg("fbm1d takes one-dimensional points")),
            (Kernel::Levy { .. }, Index::Point(_)) => Ok(()),
            (Kernel::CustomVariogram { .. }, _) => Ok(()),
            (Kernel::Sheet { hurst }, Index::Point(p)) => {
                if p.len() != hurst.len() {
                    return Err(Error::arg(format!(
                        "sheet with {} exponents applied to a point of dimension {}",
                        hurst.len(),
                        p.len()
                    )));
                }
                check_nonneg(p)
            }
            (Kernel::MpFbm { .. }, Index::Point(p)) => check_nonneg(p),
            (Kernel::L2Fbm { space, .. }, Index::Func(f)) => {
                if Arc::ptr_eq(space, f.space()) || **space == **f.space() {
                    Ok(())
                } else {
                    Err(Error::arg("l2fbm: L2 vector is bound to a different measure space"))
                }
            }
            (k, other) => Err(Error::arg(format!(
                "{} kernel cannot take a {} index",
                k.family(),
                other.kind()
            ))),
        }
    }

    /// `E((X_a − X_b)²)`.
    pub fn variogram(&self, a: &Index, b: &Index) -> Result<f64> {
        self.check_index(a)?;
        self.check_index(b)?;
        match self {
            Kernel::Fbm1d { hurst } | Kernel::Levy { hurst } => Ok(a.dist_sq(b)?.powf(*hurst)),
            Kernel::L2Fbm { hurst, .. } => Ok(a.dist_sq(b)?.powf(2.0 * hurst)),
            Kernel::CustomVariogram { alpha } => Ok(a.dist_sq(b)?.powf(alpha / 2.0)),
            Kernel::MpFbm { hurst, .. } => {
                let m = rect_measures(&as_rect(a)?, &as_rect(b)?)?;
                Ok(m.lam_symdiff.powf(2.0 * hurst))
            }
            Kernel::Sheet { hurst } => {
                let (s, t) = (a.as_point()?, b.as_point()?);
                Ok(sheet_unchecked(hurst, s, s) + sheet_unchecked(hurst, t, t)
                    - 2.0 * sheet_unchecked(hurst, s, t))
            }
        }
    }

    /// `Φ(a − b)` for families where it is a function of the difference.
    fn phi_of_diff(&self, a: &Index, b: &Index) -> Result<f64> {
        match self {
            Kernel::Fbm1d { hurst } | Kernel::Levy { hurst } => Ok(a.dist_sq(b)?.powf(*hurst)),
            Kernel::L2Fbm { hurst, .. } => Ok(a.dist_sq(b)?.powf(2.0 * hurst)),
            Kernel::CustomVariogram { alpha } => Ok(a.dist_sq(b)?.powf(alpha / 2.0)),
            _ => Err(Error::arg(format!(
                "{} kernel has no translation-invariant variogram",
                self.family()
            ))),
        }
    }

    pub fn is_difference_variogram(&self) -> bool {
        self.norm_exponent().is_some()
    }
}

fn check_nonneg(p: &[f64]) -> Result<()> {
    if p.iter().all(|x| x.is_finite() && *x >= 0.0) {
        Ok(())
    } else {
        Err(Error::arg(format!("index point must lie in R_+^d, got {p:?}")))
    }
}

fn as_rect(a: &Index) -> Result<Rect> {
    Rect::new(a.as_point()?.to_vec())
}

impl Covariance for Kernel {
    fn cov(&self, a: &Index, b: &Index) -> Result<f64> {
        self.check_index(a)?;
        self.check_index(b)?;
        match self {
            Kernel::Sheet { hurst } => Ok(sheet_unchecked(hurst, a.as_point()?, b.as_point()?)),
            Kernel::MpFbm { hurst, .. } => {
                let m = rect_measures(&as_rect(a)?, &as_rect(b)?)?;
                let p = 2.0 * hurst;
                Ok(0.5 * (m.lam_s.powf(p) + m.lam_t.powf(p) - m.lam_symdiff.powf(p)))
            }
            _ => {
                let zero = a.zero_like();
                let pa = self.phi_of_diff(a, &zero)?;
                let pb = self.phi_of_diff(b, &zero)?;
                let pab = self.phi_of_diff(a, b)?;
                Ok(0.5 * (pa + pb - pab))
            }
        }
    }

    /// For variogram families this is evaluated through the polarization
    /// identity `½(Φ(a−d) + Φ(b−c) − Φ(a−c) − Φ(b−d))`, which depends on the
    /// four indices only through their differences.
    fn increment_cov(&self, a: &Index, b: &Index, c: &Index, d: &Index) -> Result<f64> {
        if self.is_difference_variogram() {
            for x in [a, b, c, d] {
                self.check_index(x)?;
            }
            Ok(0.5
                * (self.phi_of_diff(a, d)? + self.phi_of_diff(b, c)?
                    - self.phi_of_diff(a, c)?
                    - self.phi_of_diff(b, d)?))
        } else {
            Ok(self.cov(a, c)? - self.cov(a, d)? - self.cov(b, c)? + self.cov(b, d)?)
        }
    }

    fn increment_kind(&self) -> IncrementKind {
        match self {
            Kernel::Sheet { .. } => IncrementKind::Rectangle,
            Kernel::MpFbm { .. } => IncrementKind::Unsupported,
            _ => IncrementKind::Difference,
        }
    }

    fn label(&self) -> String {
        match self {
            Kernel::Fbm1d { hurst } => format!("fbm1d(H={hurst})"),
            Kernel::Levy { hurst } => format!("levy(H={hurst})"),
            Kernel::Sheet { hurst } => format!("sheet(H={hurst:?})"),
            Kernel::MpFbm { hurst, .. } => format!("mpfbm(H={hurst})"),
            Kernel::L2Fbm { hurst, .. } => format!("l2fbm(H={hurst})"),
            Kernel::CustomVariogram { alpha } => format!("custom_variogram(alpha={alpha})"),
        }
    }
}

/// L²-indexed fBm covariance `½(m(f²)^{2H} + m(g²)^{2H} − m((f−g)²)^{2H})`,
/// `H ∈ (0, 1/2]`.
pub fn cov_l2fbm(space: &MeasureSpace, hurst: f64, f: &L2Vec, g: &L2Vec) -> Result<f64> {
    check_half(hurst, false, "l2fbm")?;
    cov_l2fbm_unchecked(space, hurst, f, g)
}

pub(crate) fn cov_l2fbm_unchecked(space: &MeasureSpace, hurst: f64, f: &L2Vec, g: &L2Vec) -> Result<f64> {
    let ff = l2_dot(space, f, f)?;
    let gg = l2_dot(space, g, g)?;
    let fg = l2_dot(space, f, g)?;
    // m((f−g)²) expanded; clamp the rounding-level negatives of near-equal f, g
    let dd = (ff + gg - 2.0 * fg).max(0.0);
    let p = 2.0 * hurst;
    Ok(0.5 * (ff.powf(p) + gg.powf(p) - dd.powf(p)))
}

/// Lévy fBm covariance on `R^d`. At `d = 1` this is the classical fBm kernel.
pub fn cov_levy(hurst: f64, s: &[f64], t: &[f64]) -> Result<f64> {
    check_open_unit(hurst, "levy")?;
    if s.len() != t.len() {
        return Err(Error::arg("levy: points of different dimensions"));
    }
    let ns: f64 = s.iter().map(|x| x * x).sum();
    let nt: f64 = t.iter().map(|x| x * x).sum();
    let nd: f64 = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * (ns.powf(hurst) + nt.powf(hurst) - nd.powf(hurst)))
}

/// Fractional Brownian sheet covariance
/// `2^{−d} ∏_k (|t_k|^{2H_k} + |s_k|^{2H_k} − |t_k − s_k|^{2H_k})`.
pub fn cov_sheet(hurst: &[f64], s: &[f64], t: &[f64]) -> Result<f64> {
    if s.len() != hurst.len() || t.len() != hurst.len() {
        return Err(Error::arg("sheet: dimension mismatch between Hvec and points"));
    }
    for &h in hurst {
        check_open_unit(h, "sheet")?;
    }
    check_nonneg(s)?;
    check_nonneg(t)?;
    Ok(sheet_unchecked(hurst, s, t))
}

pub(crate) fn sheet_unchecked(hurst: &[f64], s: &[f64], t: &[f64]) -> f64 {
    hurst
        .iter()
        .zip(s.iter().zip(t))
        .map(|(h, (a, b))| {
            let p = 2.0 * h;
            0.5 * (a.abs().powf(p) + b.abs().powf(p) - (a - b).abs().powf(p))
        })
        .product()
}

/// Multiparameter fBm covariance
/// `½(λ[0,s]^{2H} + λ[0,t]^{2H} − λ([0,s] △ [0,t])^{2H})`, `H ∈ (0, 1/2]`.
pub fn cov_mpfbm(hurst: f64, s: &Rect, t: &Rect) -> Result<f64> {
    check_half(hurst, false, "mpfbm")?;
    let m = rect_measures(s, t)?;
    let p = 2.0 * hurst;
    Ok(0.5 * (m.lam_s.powf(p) + m.lam_t.powf(p) - m.lam_symdiff.powf(p)))
}

/// Covariance matrix over a finite design.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub matrix: DMatrix<f64>,
    pub design_size: usize,
    /// Smallest eigenvalue of `matrix` (before any jitter).
    pub min_eig: f64,
    pub jitter_applied: f64,
}

impl Gram {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::arg("Gram matrix must be square"));
        }
        let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if linalg::asymmetry(&matrix) > 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::arg("Gram matrix is not symmetric"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric("Gram matrix has non-finite entries"));
        }
        let min_eig = linalg::min_eigenvalue(&matrix);
        Ok(Gram {
            design_size: matrix.nrows(),
            matrix,
            min_eig,
            jitter_applied: 0.0,
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// PSD up to `−rel_tol · trace`.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        self.min_eig >= -rel_tol * self.trace().abs()
    }
}

/// Pairwise covariance matrix of `kernel` over `design`.
pub fn gram<K: Covariance + ?Sized>(kernel: &K, design: &[Index]) -> Result<Gram> {
    if design.is_empty() {
        return Err(Error::arg("design must be non-empty"));
    }
    let n = design.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| kernel.cov(&design[i], &design[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            m[(i, i + k)] = v;
            m[(i + k, i)] = v;
        }
    }
    Gram::from_matrix(m)
}

/// JSON kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum KernelSpec {
    #[serde(rename = "fbm1d")]
    Fbm1d {
        #[serde(rename = "H")]
        hurst: f64,
    },
    #[serde(rename = "levy")]
    Levy {
        #[serde(rename = "H")]
        hurst: f64,
    },
    #[serde(rename = "sheet")]
    Sheet {
        #[serde(rename = "Hvec")]
        hurst: Vec<f64>,
    },
    #[serde(rename = "mpfbm")]
    MpFbm {
        #[serde(rename = "H")]
        hurst: f64,
        #[serde(default)]
        experimental: bool,
    },
    #[serde(rename = "l2fbm")]
    L2Fbm {
        #[serde(rename = "H")]
        hurst: f64,
        #[serde(default)]
        experimental: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space: Option<SpaceDesc>,
    },
    #[serde(rename = "custom_variogram")]
    CustomVariogram { alpha: f64 },
}

impl KernelSpec {
    /// Build the kernel. `l2fbm` takes its measure space from its own description or,
    /// failing that, from `default_space`.
    pub fn build(&self, default_space: Option<&Arc<MeasureSpace>>) -> Result<Kernel> {
        match self {
            KernelSpec::Fbm1d { hurst } => Kernel::fbm1d(*hurst),
            KernelSpec::Levy { hurst } => Kernel::levy(*hurst),
            KernelSpec::Sheet { hurst } => Kernel::sheet(hurst.clone()),
            KernelSpec::MpFbm { hurst, experimental } => {
                if *experimental {
                    Kernel::mpfbm_experimental(*hurst)
                } else {
                    Kernel::mpfbm(*hurst)
                }
            }
            KernelSpec::L2Fbm { hurst, experimental, space } => {
                let space = match (space, default_space) {
                    (Some(desc), _) => Arc::new(desc.build()?),
                    (None, Some(s)) => Arc::clone(s),
                    (None, None) => return Err(Error::arg("l2fbm kernel requires a measure space")),
                };
                if *experimental {
                    Kernel::l2fbm_experimental(space, *hurst)
                } else {
                    Kernel::l2fbm(space, *hurst)
                }
            }
            KernelSpec::CustomVariogram { alpha } => Kernel::custom_variogram(*alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::{indicator_rect, make_grid_space};

    fn grid(d: usize, n: usize, e: f64) -> Arc<MeasureSpace> {
        Arc::new(make_grid_space(d, n, e).unwrap())
    }

    fn rect(v: &[f64]) -> Rect {
        Rect::new(v.to_vec()).unwrap()
    }

    #[test]
    fn l2fbm_examples() {
        let s = grid(1, 4, 2.0);
        let f = indicator_rect(&s, &rect(&[1.0])).unwrap();
        let g = indicator_rect(&s, &rect(&[2.0])).unwrap();
        for h in [0.1, 0.25, 0.5] {
            assert!((cov_l2fbm(&s, h, &f, &f).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((cov_l2fbm(&s, 0.5, &f, &g).unwrap() - 1.0).abs() < 1e-15);
        let v = cov_l2fbm(&s, 0.25, &f, &g).unwrap();
        assert!((v - 0.7071067811865476).abs() < 1e-15);
        assert!(cov_l2fbm(&s, 0.7, &f, &g).is_err());
        assert!(Kernel::l2fbm_experimental(Arc::clone(&s), 0.7).is_ok());
    }

    #[test]
    fn levy_examples() {
        let t = [0.3, 1.7];
        let v = cov_levy(0.35, &t, &t).unwrap();
        let n2: f64 = 0.3f64 * 0.3 + 1.7 * 1.7;
        assert!((v - n2.powf(0.35)).abs() < 1e-15);
        let v = cov_levy(0.5, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 0.2928932188134524).abs() < 1e-15);
        let k = Kernel::levy(0.3).unwrap();
        let inc = k
            .variogram(&Index::point([3.0, 4.0]), &Index::point([0.0, 0.0]))
            .unwrap();
        assert!((inc - 2.6265278044037674).abs() < 1e-12);
        assert!(cov_levy(1.0, &[1.0], &[1.0]).is_err());
        assert!(cov_levy(0.5, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sheet_examples() {
        let h = [0.3, 0.7];
        assert_eq!(cov_sheet(&h, &[0.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cov_sheet(&h, &[1.0, 2.0], &[1.0, 0.0]).unwrap(), 0.0);
        let v = cov_sheet(&[0.5, 0.5], &[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        for (s, t) in [(0.3, 1.9), (2.0, 0.5), (1.0, 1.0)] {
            let a = cov_sheet(&[0.4], &[s], &[t]).unwrap();
            let b = cov_levy(0.4, &[s], &[t]).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        assert!(cov_sheet(&[0.5], &[-1.0], &[1.0]).is_err());
        assert!(cov_sheet(&[1.5], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn mpfbm_examples() {
        let v = cov_mpfbm(0.5, &rect(&[1.0, 2.0]), &rect(&[2.0, 1.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = cov_mpfbm(0.25, &rect(&[1.0, 1.0]), &rect(&[1.0, 1.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let v = cov_mpfbm(0.5, &rect(&[1.0, 1.0]), &rect(&[2.0, 2.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(cov_mpfbm(0.6, &rect(&[1.0]), &rect(&[1.0])).is_err());
    }

    #[test]
    fn gram_single_point() {
        let k = Kernel::levy(0.4).unwrap();
        let g = gram(&k, &[Index::point([2.0])]).unwrap();
        let var = 2.0f64.powf(0.8);
        assert_eq!(g.design_size, 1);
        assert!((g.matrix[(0, 0)] - var).abs() < 1e-15);
        assert!((g.min_eig - var).abs() < 1e-14);
    }

    #[test]
    fn gram_orthogonal_indicators_at_half() {
        // disjoint unit-mass indicators: Φ is additive on orthogonal supports at H = ½
        let s = grid(1, 4, 4.0);
        let design: Vec<Index> = (0..4)
            .map(|k| {
                let mut c = vec![0.0; 4];
                c[k] = 1.0;
                Index::Func(L2Vec::new(&s, c).unwrap())
            })
            .collect();
        let k = Kernel::l2fbm(Arc::clone(&s), 0.5).unwrap();
        let g = gram(&k, &design).unwrap();
        let id = DMatrix::<f64>::identity(4, 4);
        assert!(linalg::max_abs_diff(&g.matrix, &id) < 1e-15);
    }

    #[test]
    fn custom_variogram_above_two_is_indefinite() {
        let k = Kernel::custom_variogram(2.5).unwrap();
        let design: Vec<Index> = (0..4).map(|i| Index::point([i as f64])).collect();
        let g = gram(&k, &design).unwrap();
        assert!(g.min_eig < 0.0, "min_eig = {}", g.min_eig);
        assert!(!g.is_psd(1e-8));
    }

    #[test]
    fn kernel_index_compatibility() {
        let k = Kernel::fbm1d(0.3).unwrap();
        assert!(k.cov(&Index::point([1.0, 2.0]), &Index::point([1.0, 2.0])).is_err());
        let s = grid(1, 2, 1.0);
        let f = Index::Func(L2Vec::constant(&s, 1.0));
        assert!(k.cov(&f, &f).is_err());
        let mp = Kernel::mpfbm(0.3).unwrap();
        assert!(mp.cov(&Index::point([-1.0]), &Index::point([1.0])).is_err());
        assert!(gram(&k, &[]).is_err());
    }

    #[test]
    fn kernel_spec_json() {
        let spec: KernelSpec = serde_json::from_str(r#"{"family": "levy", "H": 0.3}"#).unwrap();
        assert_eq!(spec.build(None).unwrap(), Kernel::Levy { hurst: 0.3 });
        let spec: KernelSpec =
            serde_json::from_str(r#"{"family": "sheet", "Hvec": [0.3, 0.7]}"#).unwrap();
        assert!(spec.build(None).is_ok());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family": "levy"}"#).is_err());
        let spec: KernelSpec = serde_json::from_str(r#"{"family": "l2fbm", "H": 0.3}"#).unwrap();
        assert!(spec.build(None).is_err());
        let spec: KernelSpec = serde_json::from_str(
            r#"{"family": "l2fbm", "H": 0.3, "space": {"grid": {"dim": 1, "n": 4, "extent": 1}}}"#,
        )
        .unwrap();
        assert!(spec.build(None).is_ok());
    }
}
