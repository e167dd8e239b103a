//! Finite-dimensional RKHS of a covariance, the linear process it induces,
//! and recovery of the fractional exponent from variogram and covariance
//! samples.
//!
//! Exponent bookkeeping: a fitted variogram `Φ(f) = σ² ‖f‖^β` corresponds to
//! the `l2fbm` kernel parameter `H = β/4`, whose SS1 order is `β/2` and SS2
//! order is `β/4`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Index;
use crate::kernels::{gram, Covariance};
use crate::linalg::{max_abs_diff, pseudo_inverse};
use crate::report::{Report, Status};
use crate::stats::ols;

/// Singular values at or below this fraction of the largest count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Relative residual above which a target is not in the Gram's range.
pub const REPRESENTABLE_TOL: f64 = 1e-8;

/// `span{C(t_n, ·)}` over a finite design.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsModel {
    pub design: Vec<Index>,
    pub gram_c: DMatrix<f64>,
    pub pseudo_inverse: DMatrix<f64>,
    pub rank: usize,
}

impl RkhsModel {
    pub fn new<K: Covariance + ?Sized>(kernel: &K, design: Vec<Index>) -> Result<Self> {
        let g = gram(kernel, &design)?;
        if !g.is_psd(1e-10) {
            return Err(Error::Numeric {
                message: "covariance Gram is not positive semidefinite".into(),
                min_eig: Some(g.min_eig),
            });
        }
        Self::from_gram(design, g.matrix)
    }

    pub fn from_gram(design: Vec<Index>, gram_c: DMatrix<f64>) -> Result<Self> {
        if gram_c.nrows() != design.len() || !gram_c.is_square() {
            return Err(Error::arg("Gram size does not match the design"));
        }
        let (pinv, rank) = pseudo_inverse(&gram_c, RANK_CUTOFF);
        let back = &pinv * &gram_c * &pinv;
        let scale = pinv.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if max_abs_diff(&back, &pinv) > 1e-8 * scale {
            return Err(Error::numeric("pseudo-inverse fails P C P = P"));
        }
        Ok(RkhsModel {
            design,
            gram_c,
            pseudo_inverse: pinv,
            rank,
        })
    }

    pub fn len(&self) -> usize {
        self.design.len()
    }

    pub fn is_empty(&self) -> bool {
        self.design.is_empty()
    }

    /// `(f, g)_{H(C)} = αᵀ C β`.
    pub fn inner(&self, alpha: &DVector<f64>, beta: &DVector<f64>) -> f64 {
        (alpha.transpose() * &self.gram_c * beta)[(0, 0)]
    }
}

/// Reproducing property on the design: for `f = Σ α_n C(t_n, ·)`,
/// `(f, C(t_k, ·))_{H(C)} = f(t_k)` to `1e-12` and `‖f‖² ≥ 0`.
pub fn rkhs_check(model: &RkhsModel, coeffs: &[f64]) -> Result<Report> {
    let n = model.len();
    if coeffs.len() != n {
        return Err(Error::arg(format!(
            "coefficient vector of length {} for a design of {n}",
            coeffs.len()
        )));
    }
    let alpha = DVector::from_column_slice(coeffs);
    let mut residual = 0.0f64;
    for k in 0..n {
        let e_k = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
        let via_inner = model.inner(&alpha, &e_k);
        let pointwise: f64 = (0..n).map(|m| coeffs[m] * model.gram_c[(k, m)]).sum();
        residual = residual.max((via_inner - pointwise).abs() / pointwise.abs().max(1.0));
    }
    let norm_sq = model.inner(&alpha, &alpha);
    let scale = alpha.norm_squared() * model.gram_c.trace().abs();
    let mut report = Report::new("rkhs-reproducing");
    report.stat("norm_sq", norm_sq);
    report.stat("rank", model.rank as f64);
    report.judge(residual, 1e-12);
    if norm_sq < -1e-12 * scale.max(f64::MIN_POSITIVE) {
        report.fail(format!("negative RKHS norm {norm_sq:e}"));
    }
    Ok(report)
}

/// Minimal-norm `α` with `C α = target`; errors when the relative residual
/// exceeds [`REPRESENTABLE_TOL`].
pub fn linear_extend(model: &RkhsModel, target: &[f64]) -> Result<DVector<f64>> {
    if target.len() != model.len() {
        return Err(Error::arg("target length does not match the design"));
    }
    let y = DVector::from_column_slice(target);
    let alpha = &model.pseudo_inverse * &y;
    let residual = (&model.gram_c * &alpha - &y).norm() / y.norm().max(f64::MIN_POSITIVE);
    if residual > REPRESENTABLE_TOL {
        return Err(Error::NotRepresentable { residual });
    }
    Ok(alpha)
}

/// A formal linear combination of named elements, keyed by element id.
/// Coefficients cancelling to exactly zero are dropped.
pub type Symbolic = BTreeMap<usize, f64>;

fn sym_combine(a: &Symbolic, b: &Symbolic, sign: f64) -> Symbolic {
    let mut out = a.clone();
    for (&k, &v) in b {
        let e = out.entry(k).or_insert(0.0);
        *e += sign * v;
        if *e == 0.0 {
            out.remove(&k);
        }
    }
    out
}

fn sym_atom(id: usize) -> Symbolic {
    BTreeMap::from([(id, 1.0)])
}

/// The linear process `X̂(f) = Σ α_n X_{t_n}` over named elements `f_e` of
/// `H(C)`, each given by its values on the design.
#[derive(Debug, Clone)]
pub struct LinearProcess<'a> {
    model: &'a RkhsModel,
    coeffs: Vec<DVector<f64>>,
}

impl<'a> LinearProcess<'a> {
    pub fn new(model: &'a RkhsModel, element_values: &[Vec<f64>]) -> Result<Self> {
        let coeffs = element_values
            .iter()
            .map(|v| linear_extend(model, v))
            .collect::<Result<_>>()?;
        Ok(LinearProcess { model, coeffs })
    }

    /// Coefficients on `(X_{t_n})` of `X̂` at a symbolic element.
    pub fn expand(&self, s: &Symbolic) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.model.len());
        for (&id, &c) in s {
            let a = self
                .coeffs
                .get(id)
                .ok_or_else(|| Error::arg(format!("unknown element id {id}")))?;
            out += a * c;
        }
        Ok(out)
    }

    /// `E[X̂(a) X̂(b)]`.
    pub fn cov(&self, a: &Symbolic, b: &Symbolic) -> Result<f64> {
        Ok(self.model.inner(&self.expand(a)?, &self.expand(b)?))
    }
}

/// Exact SI2 of the extended process: for element-id pairs `(f, g)` and
/// shifts `h`, the symbolic increment `X̂(f + h) − X̂(g + h)` must equal
/// `X̂(f) − X̂(g)` and the increment covariance matrices must be identical
/// (tolerance zero).
pub fn linear_process_si2_check(
    process: &LinearProcess<'_>,
    pairs: &[(usize, usize)],
    shifts: &[usize],
) -> Result<Report> {
    if pairs.is_empty() {
        return Err(Error::arg("need at least one increment pair"));
    }
    let base: Vec<Symbolic> = pairs
        .iter()
        .map(|&(f, g)| sym_combine(&sym_atom(f), &sym_atom(g), -1.0))
        .collect();
    let gram_of = |incs: &[Symbolic]| -> Result<DMatrix<f64>> {
        let n = incs.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = process.cov(&incs[i], &incs[j])?;
            }
        }
        Ok(m)
    };
    let reference = gram_of(&base)?;
    let mut report = Report::new("linear-extension-si2").with_mode("SI2");
    let mut symbolic_ok = true;
    let mut worst = 0.0f64;
    for &h in shifts {
        let shifted: Vec<Symbolic> = pairs
            .iter()
            .map(|&(f, g)| {
                let fh = sym_combine(&sym_atom(f), &sym_atom(h), 1.0);
                let gh = sym_combine(&sym_atom(g), &sym_atom(h), 1.0);
                sym_combine(&fh, &gh, -1.0)
            })
            .collect();
        symbolic_ok &= shifted == base;
        worst = worst.max(max_abs_diff(&gram_of(&shifted)?, &reference));
    }
    report.judge(worst, 0.0);
    if !symbolic_ok {
        report.fail("shifted symbolic increments differ from unshifted ones");
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CharacterizeMode {
    /// Strong increment stationarity with dilation self-similarity.
    P31,
    /// Weak increment stationarity with norm-scaling self-similarity.
    P32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characterization {
    pub verdict: Verdict,
    /// Fitted exponent `β` of `Φ(f) = σ² ‖f‖^β`.
    pub fitted_order: f64,
    pub sigma2: f64,
    /// The `l2fbm` parameter reproducing the fit, `β/4`.
    pub kernel_h: f64,
    pub ss1_order: f64,
    pub ss2_order: f64,
    pub report: Report,
}

/// Fit `Φ(f) = σ² ‖f‖^β` by log-log OLS (reject if the largest log residual
/// exceeds `1e-8`), then require `C(a, b) = ½(Φ(a) + Φ(b) − Φ(a − b))` on every
/// covariance sample to `1e-8` relative.
pub fn characterize_fractional(
    phi_samples: &[(Index, f64)],
    cov_samples: &[((Index, Index), f64)],
    mode: CharacterizeMode,
) -> Result<Characterization> {
    if phi_samples.len() < 4 {
        return Err(Error::arg("need at least 4 variogram samples"));
    }
    let mut norms: Vec<f64> = Vec::with_capacity(phi_samples.len());
    let mut logs: Vec<f64> = Vec::with_capacity(phi_samples.len());
    for (f, v) in phi_samples {
        let n = f.norm();
        if !(n > 0.0) || !(*v > 0.0) {
            return Err(Error::arg("variogram samples need nonzero index and positive value"));
        }
        norms.push(n.ln());
        logs.push(v.ln());
    }
    let mut distinct = norms.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() != norms.len() {
        return Err(Error::arg("variogram samples need distinct norms"));
    }
    let kinds: Vec<&str> = cov_samples
        .iter()
        .flat_map(|((a, b), _)| [a.kind(), b.kind()])
        .chain(phi_samples.iter().map(|(f, _)| f.kind()))
        .collect();
    if kinds.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::arg("samples mix point and function indices"));
    }

    let fit = ols(&norms, &logs)?;
    let beta = fit.slope;
    let sigma2 = fit.intercept.exp();
    let kernel_h = beta / 4.0;
    let mut report = Report::new("characterize").with_mode(match mode {
        CharacterizeMode::P31 => "P31",
        CharacterizeMode::P32 => "P32",
    });
    report.stat("fitted_norm_exponent", beta);
    report.stat("sigma2", sigma2);
    report.stat("kernel_H", kernel_h);
    report.stat("ss1_order", 2.0 * kernel_h);
    report.stat("ss2_order", kernel_h);
    report.stat("log_fit_max_residual", fit.max_residual);
    report.detail(format!(
        "Phi(f) = {sigma2:.12} * |f|^{beta:.12}; l2fbm H = exponent/4 = {kernel_h:.12}; SS1 order = 2H; SS2 order = H"
    ));
    report.detail(match mode {
        CharacterizeMode::P31 => format!("reported self-similarity order (SS1): {:.12}", 2.0 * kernel_h),
        CharacterizeMode::P32 => format!("reported self-similarity order (SS2): {kernel_h:.12}"),
    });

    let mut ok = true;
    if fit.max_residual > 1e-8 {
        ok = false;
        report.detail(format!(
            "variogram is not a power of the norm (log residual {:e})",
            fit.max_residual
        ));
    }
    let phi = |x: &Index| sigma2 * x.norm().powf(beta);
    let mut worst = 0.0f64;
    for ((a, b), c) in cov_samples {
        let d = a.try_sub(b)?;
        let (pa, pb, pd) = (phi(a), phi(b), phi(&d));
        let model = 0.5 * (pa + pb - pd);
        let scale = (0.5 * (pa + pb + pd)).max(c.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((c - model).abs() / scale);
    }
    report.max_abs_diff = Some(worst);
    report.tolerance = Some(1e-8);
    if worst > 1e-8 {
        ok = false;
        report.detail(format!(
            "covariance differs from the variogram form (relative error {worst:e})"
        ));
    }
    report.set_status(if ok { Status::Pass } else { Status::Fail });
    Ok(Characterization {
        verdict: if ok { Verdict::Accept } else { Verdict::Reject },
        fitted_order: beta,
        sigma2,
        kernel_h,
        ss1_order: 2.0 * kernel_h,
        ss2_order: kernel_h,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;

    fn fbm_model(n: usize) -> RkhsModel {
        let k = Kernel::fbm1d(0.35).unwrap();
        let design = (1..=n).map(|i| Index::point([i as f64 * 0.5])).collect();
        RkhsModel::new(&k, design).unwrap()
    }

    #[test]
    fn basis_and_zero_coefficients() {
        let m = fbm_model(4);
        let r = rkhs_check(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(r.pass);
        let r = rkhs_check(&m, &[0.0; 4]).unwrap();
        assert_eq!(r.stats["norm_sq"], 0.0);
        assert!(rkhs_check(&m, &[1.0]).is_err());
    }

    #[test]
    fn column_target_gives_basis_vector() {
        let m = fbm_model(5);
        let col: Vec<f64> = m.gram_c.column(2).iter().copied().collect();
        let a = linear_extend(&m, &col).unwrap();
        for (i, v) in a.iter().enumerate() {
            let e = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-8, "{a}");
        }
    }

    #[test]
    fn inconsistent_target_not_representable() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let g = &v * v.transpose();
        let m = RkhsModel::from_gram(vec![Index::point([1.0]), Index::point([2.0])], g).unwrap();
        assert_eq!(m.rank, 1);
        assert!(matches!(
            linear_extend(&m, &[1.0, 0.0]),
            Err(Error::NotRepresentable { .. })
        ));
        assert!(linear_extend(&m, &[2.0, 4.0]).is_ok());
    }

    #[test]
    fn symbolic_cancellation_is_exact() {
        let a = sym_combine(&sym_atom(0), &sym_atom(2), 1.0);
        let b = sym_combine(&sym_atom(1), &sym_atom(2), 1.0);
        let d = sym_combine(&a, &b, -1.0);
        assert_eq!(d, BTreeMap::from([(0, 1.0), (1, -1.0)]));
    }

    #[test]
    fn degenerate_phi_samples_rejected() {
        let p = |x: f64| (Index::point([x]), x);
        assert!(characterize_fractional(&[p(1.0), p(2.0), p(3.0)], &[], CharacterizeMode::P31).is_err());
        assert!(characterize_fractional(&[p(1.0), p(1.0), p(2.0), p(3.0)], &[], CharacterizeMode::P31).is_err());
    }
}
