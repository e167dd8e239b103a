//! Increment stationarity and self-similarity, checked exactly on kernel
//! covariances and empirically on sampled paths.
//!
//! Order conventions for `l2fbm` with kernel parameter `H`:
//!
//! | map                                | variance factor | fitted order |
//! |------------------------------------|-----------------|--------------|
//! | dilation `f ↦ a f` (SS1)           | `a^{4H}`        | `2H`         |
//! | norm-scaling map, `ρ = ‖φ‖²` (SS2) | `ρ^{2H}`        | `H`          |
//!
//! For `mpfbm` the corner dilation `t ↦ a t` in `R^d` has `ρ = a^d` and
//! fitted order `H`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::kernels::{gram, Covariance, Gram, IncrementKind, Kernel};
use crate::linalg::max_abs_diff;
use crate::measure_space::{rect_measures, L2Vec, Rect};
use crate::report::{Report, Status};
use crate::sampler::{cholesky_factor, empirical_cov_compare, sample_paths, SamplePaths};
use crate::seeding::{sub_seed, unit_rng};
use crate::stats::ols;

/// Tolerance of every exact (covariance-level) comparison.
pub const EXACT_TOL: f64 = 1e-10;

/// Increments over `pairs`, all shifted by `shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSpec {
    pub pairs: Vec<(Index, Index)>,
    pub shift: Index,
}

impl IncrementSpec {
    /// Unshifted increments.
    pub fn new(pairs: Vec<(Index, Index)>) -> Result<Self> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::arg("increment spec needs at least one pair"))?;
        let shift = first.0.zero_like();
        Ok(IncrementSpec { pairs, shift })
    }

    pub fn with_shift(&self, shift: Index) -> IncrementSpec {
        IncrementSpec {
            pairs: self.pairs.clone(),
            shift,
        }
    }
}

/// `Σ c_k X(i_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub terms: Vec<(Index, f64)>,
}

impl LinearForm {
    pub fn single(x: Index) -> Self {
        LinearForm { terms: vec![(x, 1.0)] }
    }

    pub fn difference(a: Index, b: Index) -> Self {
        LinearForm {
            terms: vec![(a, 1.0), (b, -1.0)],
        }
    }

    /// The rectangular increment over `[lower, upper]`: a signed sum over
    /// the `2^d` corners.
    pub fn rectangle(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::arg("rectangle corners differ in dimension"));
        }
        if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::arg(format!(
                "rectangle corners are not ordered: {lower:?} ⋠ {upper:?}"
            )));
        }
        let d = lower.len();
        if d > 16 {
            return Err(Error::arg("rectangular increments are limited to d ≤ 16"));
        }
        let terms = (0..1usize << d)
            .map(|mask| {
                let corner: Vec<f64> = (0..d)
                    .map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] })
                    .collect();
                let sign = if (d - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
                (Index::Point(corner), sign)
            })
            .collect();
        Ok(LinearForm { terms })
    }

    pub fn cov<K: Covariance + ?Sized>(&self, kernel: &K, other: &LinearForm) -> Result<f64> {
        let mut s = 0.0;
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                s += ca * cb * kernel.cov(a, b)?;
            }
        }
        Ok(s)
    }
}

fn increment_forms<K: Covariance + ?Sized>(kernel: &K, spec: &IncrementSpec) -> Result<Vec<LinearForm>> {
    match kernel.increment_kind() {
        IncrementKind::Unsupported => Err(Error::arg(format!(
            "{} indices do not form a vector space; express the increments through the L2 embedding",
            kernel.label()
        ))),
        IncrementKind::Difference => spec
            .pairs
            .iter()
            .map(|(f, g)| {
                Ok(LinearForm::difference(
                    f.try_add(&spec.shift)?,
                    g.try_add(&spec.shift)?,
                ))
            })
            .collect(),
        IncrementKind::Rectangle => spec
            .pairs
            .iter()
            .map(|(upper, lower)| {
                let u = upper.try_add(&spec.shift)?;
                let l = lower.try_add(&spec.shift)?;
                LinearForm::rectangle(l.as_point()?, u.as_point()?)
            })
            .collect(),
    }
}

fn symmetric_from(n: usize, entry: impl Fn(usize, usize) -> Result<f64>) -> Result<Gram> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = entry(i, j)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Gram::from_matrix(m)
}

/// Covariance matrix of the shifted increments of `spec`.
///
/// For difference increments the entry `E[(X_{f_i+h} − X_{g_i+h})(X_{f_j+h} − X_{g_j+h})]`
/// comes from the kernel's polarization form. For the sheet a pair
/// `(upper, lower)` is the rectangular increment over `[lower + h, upper + h]`.
pub fn increment_gram<K: Covariance + ?Sized>(kernel: &K, spec: &IncrementSpec) -> Result<Gram> {
    if spec.pairs.is_empty() {
        return Err(Error::arg("increment spec needs at least one pair"));
    }
    match kernel.increment_kind() {
        IncrementKind::Difference => {
            let shifted: Vec<(Index, Index)> = spec
                .pairs
                .iter()
                .map(|(f, g)| Ok((f.try_add(&spec.shift)?, g.try_add(&spec.shift)?)))
                .collect::<Result<_>>()?;
            symmetric_from(shifted.len(), |i, j| {
                kernel.increment_cov(&shifted[i].0, &shifted[i].1, &shifted[j].0, &shifted[j].1)
            })
        }
        _ => {
            let forms = increment_forms(kernel, spec)?;
            symmetric_from(forms.len(), |i, j| forms[i].cov(kernel, &forms[j]))
        }
    }
}

/// Members of the group acting on the index space.
#[derive(Debug, Clone, PartialEq)]
pub enum L2Transform {
    Translation(Index),
    /// Orthogonal for the index inner product: `QᵀQ = I` on points,
    /// `QᵀWQ = W` on coefficient vectors with weight matrix `W`.
    Orthogonal(DMatrix<f64>),
    ScaledOrthogonal { q: DMatrix<f64>, c: f64 },
    /// Corner dilation `t ↦ a t` of `R^d`, acting on points only.
    MpDilation { a: f64, dim: usize },
    /// Applied left to right.
    Composite(Vec<L2Transform>),
}

impl L2Transform {
    pub fn dilation(a: f64, n: usize) -> Self {
        L2Transform::ScaledOrthogonal {
            q: DMatrix::identity(n, n),
            c: a,
        }
    }

    pub fn mp_dilation(a: f64, dim: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) || dim == 0 {
            return Err(Error::arg("mp_dilation needs a > 0 and dim ≥ 1"));
        }
        Ok(L2Transform::MpDilation { a, dim })
    }

    /// A random `Q` with `QᵀWQ = W`, `W = diag(weights)`: weighted
    /// Gram–Schmidt on a Gaussian matrix gives `V` with `VᵀWV = I`, and
    /// `Q = V diag(√w)`.
    pub fn random_orthogonal(weights: &[f64], rng: &mut impl Rng) -> Result<Self> {
        let n = weights.len();
        if n == 0 || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::arg("orthogonal map needs positive weights"));
        }
        let mut v = DMatrix::<f64>::zeros(n, n);
        let dot = |a: &DVector<f64>, b: &DVector<f64>| -> f64 {
            a.iter().zip(b.iter()).zip(weights).map(|((x, y), w)| w * x * y).sum()
        };
        let mut j = 0;
        while j < n {
            let mut col = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            // two passes of modified Gram–Schmidt for stability
            for _ in 0..2 {
                for k in 0..j {
                    let prev = v.column(k).into_owned();
                    let p = dot(&col, &prev);
                    col -= p * prev;
                }
            }
            let norm = dot(&col, &col).sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.set_column(j, &(col / norm));
            j += 1;
        }
        let sqrt_w = DVector::from_iterator(n, weights.iter().map(|w| w.sqrt()));
        let q = v * DMatrix::from_diagonal(&sqrt_w);
        Ok(L2Transform::Orthogonal(q))
    }

    /// Squared operator norm; `1` for translations and orthogonal maps.
    pub fn rho(&self) -> f64 {
        match self {
            L2Transform::Translation(_) | L2Transform::Orthogonal(_) => 1.0,
            L2Transform::ScaledOrthogonal { c, .. } => c * c,
            L2Transform::MpDilation { a, dim } => a.powi(*dim as i32),
            L2Transform::Composite(parts) => parts.iter().map(|p| p.rho()).product(),
        }
    }

    /// `other ∘ self`: `self` applied first.
    pub fn then(self, other: L2Transform) -> L2Transform {
        let mut parts = match self {
            L2Transform::Composite(p) => p,
            t => vec![t],
        };
        match other {
            L2Transform::Composite(p) => parts.extend(p),
            t => parts.push(t),
        }
        L2Transform::Composite(parts)
    }

    pub fn apply(&self, x: &Index) -> Result<Index> {
        match self {
            L2Transform::Translation(h) => x.try_add(h),
            L2Transform::Orthogonal(q) => apply_matrix(q, 1.0, x),
            L2Transform::ScaledOrthogonal { q, c } => apply_matrix(q, *c, x),
            L2Transform::MpDilation { a, dim } => {
                let p = x.as_point()?;
                if p.len() != *dim {
                    return Err(Error::arg(format!(
                        "mp_dilation of dimension {dim} applied to a point of dimension {}",
                        p.len()
                    )));
                }
                Ok(Index::Point(p.iter().map(|v| a * v).collect()))
            }
            L2Transform::Composite(parts) => {
                let mut y = x.clone();
                for p in parts {
                    y = p.apply(&y)?;
                }
                Ok(y)
            }
        }
    }

    /// Largest violation of `QᵀWQ = W` (or `QᵀQ = I` for points) among the
    /// orthogonal parts, relative to the largest weight.
    pub fn orthogonality_defect(&self, like: &Index) -> f64 {
        match self {
            L2Transform::Orthogonal(q) | L2Transform::ScaledOrthogonal { q, .. } => {
                let w = match like {
                    Index::Point(p) => vec![1.0; p.len()],
                    Index::Func(f) => f.space().weights().to_vec(),
                };
                if q.nrows() != w.len() || q.ncols() != w.len() {
                    return f64::INFINITY;
                }
                let wm = DMatrix::from_diagonal(&DVector::from_vec(w.clone()));
                let scale = w.iter().copied().fold(0.0, f64::max);
                max_abs_diff(&(q.transpose() * &wm * q), &wm) / scale
            }
            L2Transform::Composite(parts) => parts
                .iter()
                .map(|p| p.orthogonality_defect(like))
                .fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    fn is_rigid(&self) -> bool {
        match self {
            L2Transform::Translation(_) | L2Transform::Orthogonal(_) => true,
            L2Transform::Composite(parts) => parts.iter().all(|p| p.is_rigid()),
            _ => false,
        }
    }
}

fn apply_matrix(q: &DMatrix<f64>, c: f64, x: &Index) -> Result<Index> {
    let coeffs = match x {
        Index::Point(p) => p.as_slice(),
        Index::Func(f) => f.coeffs(),
    };
    if q.ncols() != coeffs.len() || q.nrows() != coeffs.len() {
        return Err(Error::arg(format!(
            "{}x{} map applied to an index of dimension {}",
            q.nrows(),
            q.ncols(),
            coeffs.len()
        )));
    }
    let y = q * DVector::from_column_slice(coeffs) * c;
    match x {
        Index::Point(_) => Ok(Index::Point(y.iter().copied().collect())),
        Index::Func(f) => Ok(Index::Func(L2Vec::new(f.space(), y.iter().copied().collect())?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiMode {
    /// `{X(ψ f_i) − X(ψ 0)}` against `{X(f_i) − X(0)}` for rigid maps `ψ`.
    Si1,
    /// Shifted increments against unshifted ones.
    Si2,
}

impl SiMode {
    fn name(self) -> &'static str {
        match self {
            SiMode::Si1 => "SI1",
            SiMode::Si2 => "SI2",
        }
    }
}

fn si1_gram<K: Covariance + ?Sized>(kernel: &K, points: &[Index], map: Option<&L2Transform>) -> Result<Gram> {
    let zero = points[0].zero_like();
    let (pts, origin) = match map {
        Some(t) => (
            points.iter().map(|p| t.apply(p)).collect::<Result<Vec<_>>>()?,
            t.apply(&zero)?,
        ),
        None => (points.to_vec(), zero),
    };
    symmetric_from(pts.len(), |i, j| kernel.increment_cov(&pts[i], &origin, &pts[j], &origin))
}

/// Exact stationarity check; passes iff every transformed Gram matches the
/// reference to [`EXACT_TOL`].
///
/// `Si2` accepts translations `h` and compares the increments shifted by an extra
/// `h` with the increments as given. `Si1` uses every index appearing in
/// `spec.pairs` and accepts translations, orthogonal maps and their
/// compositions.
pub fn check_si<K: Covariance + ?Sized>(
    kernel: &K,
    spec: &IncrementSpec,
    transforms: &[L2Transform],
    mode: SiMode,
) -> Result<Report> {
    if kernel.increment_kind() == IncrementKind::Unsupported {
        return Err(Error::arg(format!(
            "{} indices do not form a vector space; express the increments through the L2 embedding",
            kernel.label()
        )));
    }
    let mut report = Report::new("increment-stationarity").with_mode(mode.name());
    report.stat("n_transforms", transforms.len() as f64);
    let mut worst = 0.0f64;
    match mode {
        SiMode::Si2 => {
            let reference = increment_gram(kernel, spec)?;
            for t in transforms {
                let h = match t {
                    L2Transform::Translation(h) => h,
                    _ => return Err(Error::arg("SI2 transforms must be translations")),
                };
                let shifted = spec.with_shift(spec.shift.try_add(h)?);
                let g = increment_gram(kernel, &shifted)?;
                worst = worst.max(max_abs_diff(&g.matrix, &reference.matrix));
            }
        }
        SiMode::Si1 => {
            let points: Vec<Index> = spec
                .pairs
                .iter()
                .flat_map(|(f, g)| [f.clone(), g.clone()])
                .collect();
            let reference = si1_gram(kernel, &points, None)?;
            for t in transforms {
                if !t.is_rigid() {
                    return Err(Error::arg("SI1 transforms must be translations or orthogonal maps"));
                }
                let defect = t.orthogonality_defect(&points[0]);
                if defect > 1e-12 {
                    return Err(Error::arg(format!(
                        "transform is not orthogonal for this index space (defect {defect:e})"
                    )));
                }
                let g = si1_gram(kernel, &points, Some(t))?;
                worst = worst.max(max_abs_diff(&g.matrix, &reference.matrix));
            }
        }
    }
    report.judge(worst, EXACT_TOL);
    Ok(report)
}

/// Scale families for self-similarity fits.
#[derive(Debug, Clone, PartialEq)]
pub enum SsFamily {
    /// `f ↦ a f`, regressed on `a`.
    Dilation,
    /// `f ↦ c Q f` (`Q = I` when absent), regressed on `ρ = c²`.
    ScaledOrthogonal(Option<DMatrix<f64>>),
    /// Corner dilation of `R^d`, regressed on `ρ = a^d`.
    MpDilation,
}

impl SsFamily {
    fn name(&self) -> &'static str {
        match self {
            SsFamily::Dilation => "SS1",
            SsFamily::ScaledOrthogonal(_) => "SS2",
            SsFamily::MpDilation => "mp-dilation",
        }
    }

    fn transform(&self, v: f64, like: &Index) -> Result<L2Transform> {
        let n = like.dim();
        Ok(match self {
            SsFamily::Dilation => L2Transform::dilation(v, n),
            SsFamily::ScaledOrthogonal(q) => L2Transform::ScaledOrthogonal {
                q: q.clone().unwrap_or_else(|| DMatrix::identity(n, n)),
                c: v,
            },
            SsFamily::MpDilation => L2Transform::mp_dilation(v, n)?,
        })
    }

    /// The regressor for scale parameter `v`.
    fn abscissa(&self, v: f64, like: &Index) -> f64 {
        match self {
            SsFamily::Dilation => v,
            SsFamily::ScaledOrthogonal(_) => v * v,
            SsFamily::MpDilation => v.powi(like.dim() as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsFit {
    /// Half the fitted log-variance slope.
    pub order: f64,
    pub report: Report,
}

/// Fit the self-similarity order: per base index, OLS of `ln Var X(φ_v f)`
/// on the log of the family's regressor. Passes iff every fit has residual
/// `≤ 1e-10` and all base indices give the same slope to `1e-10`.
pub fn fit_ss_order<K: Covariance + ?Sized>(
    kernel: &K,
    base_design: &[Index],
    family: &SsFamily,
    values: &[f64],
) -> Result<SsFit> {
    if values.len() < 3 {
        return Err(Error::arg("self-similarity fit needs at least 3 scale values"));
    }
    if base_design.is_empty() {
        return Err(Error::arg("self-similarity fit needs a non-empty base design"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::arg("scale values must be positive"));
    }
    let mut slopes = Vec::with_capacity(base_design.len());
    let mut max_residual = 0.0f64;
    for f in base_design {
        let mut xs = Vec::with_capacity(values.len());
        let mut ys = Vec::with_capacity(values.len());
        for &v in values {
            let y = family.transform(v, f)?.apply(f)?;
            let var = kernel.cov(&y, &y)?;
            if !(var > 0.0) {
                return Err(Error::arg(format!("zero variance at scale {v}; cannot fit an order")));
            }
            xs.push(family.abscissa(v, f).ln());
            ys.push(var.ln());
        }
        let fit = ols(&xs, &ys)?;
        max_residual = max_residual.max(fit.max_residual);
        slopes.push(fit.slope);
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let spread = slopes.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
    let order = mean / 2.0;
    let mut report = Report::new("self-similarity-order").with_mode(family.name());
    report.stat("order", order);
    report.stat("slope", mean);
    report.stat("slope_spread", spread);
    report.stat("max_residual", max_residual);
    report.judge(max_residual.max(spread), EXACT_TOL);
    Ok(SsFit { order, report })
}

/// Rectangular-increment stationarity of the fractional Brownian sheet:
/// the covariance matrix of `Δ_{[u_i + h, v_i + h]} W` must not depend on `h`.
pub fn sheet_increment_check(hurst: &[f64], rects: &[(Vec<f64>, Vec<f64>)], shifts: &[Vec<f64>]) -> Result<Report> {
    let kernel = Kernel::sheet(hurst.to_vec())?;
    if rects.is_empty() {
        return Err(Error::arg("sheet increment check needs at least one rectangle"));
    }
    let forms = |h: &[f64]| -> Result<Vec<LinearForm>> {
        rects
            .iter()
            .map(|(u, v)| {
                if u.len() != hurst.len() || v.len() != hurst.len() || h.len() != hurst.len() {
                    return Err(Error::arg("rectangle or shift dimension does not match Hvec"));
                }
                let lo: Vec<f64> = u.iter().zip(h).map(|(a, b)| a + b).collect();
                let hi: Vec<f64> = v.iter().zip(h).map(|(a, b)| a + b).collect();
                LinearForm::rectangle(&lo, &hi)
            })
            .collect()
    };
    let cov_matrix = |fs: &[LinearForm]| symmetric_from(fs.len(), |i, j| fs[i].cov(&kernel, &fs[j]));
    let zero = vec![0.0; hurst.len()];
    let reference = cov_matrix(&forms(&zero)?)?;
    let mut worst = 0.0f64;
    for h in shifts {
        let g = cov_matrix(&forms(h)?)?;
        worst = worst.max(max_abs_diff(&g.matrix, &reference.matrix));
    }
    let mut report = Report::new("sheet-increment-stationarity");
    report.stat("n_rects", rects.len() as f64);
    report.stat("n_shifts", shifts.len() as f64);
    report.judge(worst, EXACT_TOL);
    Ok(report)
}

fn rect(p: &[f64]) -> Result<Rect> {
    Rect::new(p.to_vec())
}

/// `λ((A △ C) ∩ (B △ C)) = λ(A ∩ B) + λ(C) − λ(A ∩ C) − λ(B ∩ C)`.
fn lam_symdiff_inter(a: &Rect, b: &Rect, c: &Rect) -> Result<f64> {
    let ab = rect_measures(a, b)?.lam_inter;
    let ac = rect_measures(a, c)?.lam_inter;
    let bc = rect_measures(b, c)?.lam_inter;
    Ok((ab + c.volume() - ac - bc).max(0.0))
}

/// n-point measure increment stationarity of the multiparameter fBm: if
/// `λ((A_{t_i} △ A_{t_0}) ∩ (A_{t_j} △ A_{t_0})) = λ(A_{τ_i} ∩ A_{τ_j})` for
/// all `i, j`, the covariance matrices of `(B_{t_i} − B_{t_0})` and `(B_{τ_i})`
/// agree. When the premise fails the status is `HypothesisNotMet`.
pub fn measure_si_check(hurst: f64, t0: &[f64], t_list: &[Vec<f64>], tau_list: &[Vec<f64>]) -> Result<Report> {
    let kernel = Kernel::mpfbm(hurst)?;
    if t_list.len() != tau_list.len() || t_list.is_empty() {
        return Err(Error::arg("t_list and tau_list must be non-empty and of equal length"));
    }
    let r0 = rect(t0)?;
    let ts: Vec<Rect> = t_list.iter().map(|p| rect(p)).collect::<Result<_>>()?;
    let taus: Vec<Rect> = tau_list.iter().map(|p| rect(p)).collect::<Result<_>>()?;
    let n = ts.len();
    let mut report = Report::new("measure-increment-stationarity").with_mode("n-point");
    let mut hyp_gap = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let lhs = lam_symdiff_inter(&ts[i], &ts[j], &r0)?;
            let rhs = rect_measures(&taus[i], &taus[j])?.lam_inter;
            hyp_gap = hyp_gap.max((lhs - rhs).abs());
            scale = scale.max(lhs.abs()).max(rhs.abs());
        }
    }
    report.stat("hypothesis_gap", hyp_gap);
    if hyp_gap > 1e-12 * scale.max(1.0) {
        report.detail(format!("measure hypothesis not met (gap {hyp_gap:e})"));
        report.set_status(Status::HypothesisNotMet);
        return Ok(report);
    }
    let p0 = Index::point(t0.to_vec());
    let pts: Vec<Index> = t_list.iter().map(|p| Index::point(p.clone())).collect();
    let tau_pts: Vec<Index> = tau_list.iter().map(|p| Index::point(p.clone())).collect();
    let lhs = symmetric_from(n, |i, j| kernel.increment_cov(&pts[i], &p0, &pts[j], &p0))?;
    let rhs = gram(&kernel, &tau_pts)?;
    report.judge(max_abs_diff(&lhs.matrix, &rhs.matrix), EXACT_TOL);
    Ok(report)
}

/// One-point form: `t ≼ t′` and `λ([0,t′] \ [0,t]) = λ([0,τ])` imply
/// `Var(B_{t′} − B_t) = Var(B_τ)`. The increment variance is evaluated from
/// the covariance as `C(t′,t′) + C(t,t) − 2C(t,t′)`.
pub fn measure_si_one_point(hurst: f64, t: &[f64], t_prime: &[f64], tau: &[f64]) -> Result<Report> {
    let kernel = Kernel::mpfbm(hurst)?;
    let (rt, rtp, rtau) = (rect(t)?, rect(t_prime)?, rect(tau)?);
    if rt.dim() != rtp.dim() || rt.dim() != rtau.dim() {
        return Err(Error::arg("points differ in dimension"));
    }
    let mut report = Report::new("measure-increment-stationarity").with_mode("one-point");
    let ordered = t.iter().zip(t_prime).all(|(a, b)| a <= b);
    let diff = rect_measures(&rt, &rtp)?.lam_tminus_s;
    let vol = rtau.volume();
    report.stat("lam_difference", diff);
    report.stat("lam_tau", vol);
    if !ordered || (diff - vol).abs() > 1e-12 * diff.max(vol).max(1.0) {
        report.detail("hypothesis t ≼ t′ with λ([0,t′] \\ [0,t]) = λ([0,τ]) not met");
        report.set_status(Status::HypothesisNotMet);
        return Ok(report);
    }
    let (a, b, c) = (Index::point(t.to_vec()), Index::point(t_prime.to_vec()), Index::point(tau.to_vec()));
    let inc_var = kernel.cov(&b, &b)? + kernel.cov(&a, &a)? - 2.0 * kernel.cov(&a, &b)?;
    let tau_var = kernel.cov(&c, &c)?;
    report.stat("increment_variance", inc_var);
    report.stat("tau_variance", tau_var);
    report.judge((inc_var - tau_var).abs(), EXACT_TOL);
    Ok(report)
}

/// Sample the point process on every index used by `forms`, evaluate the
/// forms path by path, and compare their empirical covariance with `target`.
pub fn empirical_forms_check<K: Covariance + ?Sized>(
    kernel: &K,
    forms: &[LinearForm],
    target: &Gram,
    n_paths: usize,
    seed: u64,
) -> Result<Report> {
    let design: Vec<Index> = forms
        .iter()
        .flat_map(|f| f.terms.iter().map(|(x, _)| x.clone()))
        .collect();
    let g = gram(kernel, &design)?;
    let factor = cholesky_factor(&g)?;
    let paths = sample_paths(&factor, n_paths, seed)?;
    let mut values = DMatrix::zeros(n_paths, forms.len());
    let mut col = 0;
    for (k, form) in forms.iter().enumerate() {
        for (_, c) in &form.terms {
            for i in 0..n_paths {
                values[(i, k)] += c * paths.values[(i, col)];
            }
            col += 1;
        }
    }
    let increments = SamplePaths {
        values,
        seed,
        design_size: forms.len(),
    };
    let mut report = empirical_cov_compare(&increments, target)?;
    report.stat("jitter_applied", factor.jitter_applied);
    Ok(report)
}

/// Empirical SI2: for each shift `h_k` (sub-seed `k`), shifted increments are
/// sampled and compared with the exact unshifted increment covariance.
pub fn empirical_si2_check<K: Covariance + ?Sized>(
    kernel: &K,
    spec: &IncrementSpec,
    shifts: &[Index],
    n_paths: usize,
    seed: u64,
) -> Result<Report> {
    let target = increment_gram(kernel, spec)?;
    let mut report = Report::new("increment-stationarity-empirical").with_mode("SI2").with_seed(seed);
    let mut max_z = 0.0f64;
    for (k, h) in shifts.iter().enumerate() {
        let shifted = spec.with_shift(spec.shift.try_add(h)?);
        let forms = increment_forms(kernel, &shifted)?;
        let r = empirical_forms_check(kernel, &forms, &target, n_paths, sub_seed(seed, k as u64))?;
        max_z = max_z.max(r.stats["max_z"]);
        report.absorb(&r);
    }
    report.stat("max_z", max_z);
    Ok(report)
}

/// Empirical self-similarity: `X(φ_v f_i)` sampled for each scale `v` and
/// compared with `s^{2·order}` times the base Gram, `s` the family regressor.
pub fn empirical_ss_check<K: Covariance + ?Sized>(
    kernel: &K,
    base_design: &[Index],
    family: &SsFamily,
    values: &[f64],
    order: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Report> {
    let base = gram(kernel, base_design)?;
    let mut report = Report::new("self-similarity-empirical")
        .with_mode(family.name())
        .with_seed(seed);
    let mut max_z = 0.0f64;
    for (k, &v) in values.iter().enumerate() {
        let forms: Vec<LinearForm> = base_design
            .iter()
            .map(|f| Ok(LinearForm::single(family.transform(v, f)?.apply(f)?)))
            .collect::<Result<_>>()?;
        let factor = family.abscissa(v, &base_design[0]).powf(2.0 * order);
        let target = Gram::from_matrix(&base.matrix * factor)?;
        let r = empirical_forms_check(kernel, &forms, &target, n_paths, sub_seed(seed, k as u64))?;
        max_z = max_z.max(r.stats["max_z"]);
        report.absorb(&r);
    }
    report.stat("max_z", max_z);
    Ok(report)
}

/// Random `W`-orthogonal map for the index kind of `like`, from `(seed, index)`.
pub fn seeded_orthogonal(like: &Index, seed: u64, index: u64) -> Result<L2Transform> {
    let weights = match like {
        Index::Point(p) => vec![1.0; p.len()],
        Index::Func(f) => f.space().weights().to_vec(),
    };
    L2Transform::random_orthogonal(&weights, &mut unit_rng(seed, index))
}

/// Random translation of the same kind as `like`, entries uniform in
/// `[−scale, scale]`.
pub fn seeded_translation(like: &Index, scale: f64, seed: u64, index: u64) -> Result<L2Transform> {
    let mut rng = unit_rng(seed, index);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..=scale)).collect() };
    let h = match like {
        Index::Point(p) => Index::Point(draw(p.len())),
        Index::Func(f) => Index::Func(L2Vec::new(f.space(), draw(f.coeffs().len()))?),
    };
    Ok(L2Transform::Translation(h))
}

/// Function index over `space`.
pub fn func(space: &Arc<crate::measure_space::MeasureSpace>, coeffs: Vec<f64>) -> Result<Index> {
    Ok(Index::Func(L2Vec::new(space, coeffs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::make_grid_space;

    fn space(n: usize) -> Arc<crate::measure_space::MeasureSpace> {
        Arc::new(make_grid_space(1, n, 2.0).unwrap())
    }

    #[test]
    fn null_increment_is_zero() {
        let s = space(4);
        let k = Kernel::l2fbm(Arc::clone(&s), 0.3).unwrap();
        let f = func(&s, vec![1.0, 0.0, 2.0, 1.0]).unwrap();
        let spec = IncrementSpec::new(vec![(f.clone(), f)]).unwrap();
        let g = increment_gram(&k, &spec).unwrap();
        assert_eq!(g.matrix, DMatrix::zeros(1, 1));
    }

    #[test]
    fn mpfbm_increments_rejected() {
        let k = Kernel::mpfbm(0.3).unwrap();
        let spec = IncrementSpec::new(vec![(Index::point([1.0, 1.0]), Index::point([0.5, 0.5]))]).unwrap();
        assert!(increment_gram(&k, &spec).is_err());
        assert!(check_si(&k, &spec, &[], SiMode::Si2).is_err());
    }

    #[test]
    fn random_orthogonal_preserves_weights() {
        let s = Arc::new(
            crate::measure_space::MeasureSpace::new(1, vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 2.0, 1.5])
                .unwrap(),
        );
        let f = func(&s, vec![1.0, -1.0, 0.5]).unwrap();
        let q = seeded_orthogonal(&f, 3, 0).unwrap();
        assert!(q.orthogonality_defect(&f) < 1e-12);
        let qf = q.apply(&f).unwrap();
        assert!((qf.norm_sq() - f.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn rectangle_form_in_one_dimension() {
        let f = LinearForm::rectangle(&[1.0], &[3.0]).unwrap();
        assert_eq!(f.terms.len(), 2);
        assert_eq!(f.terms[0], (Index::point([1.0]), -1.0));
        assert_eq!(f.terms[1], (Index::point([3.0]), 1.0));
        assert!(LinearForm::rectangle(&[2.0], &[1.0]).is_err());
    }

    #[test]
    fn one_point_example() {
        let r = measure_si_one_point(0.25, &[1.0, 1.0], &[2.0, 2.0], &[3.0, 1.0]).unwrap();
        assert!(r.pass && r.status == Status::Pass);
        assert!((r.stats["increment_variance"] - 3f64.sqrt()).abs() < 1e-12);
        let r = measure_si_one_point(0.25, &[1.0, 1.0], &[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.status, Status::HypothesisNotMet);
        assert!(r.pass);
    }

    #[test]
    fn ss_fit_needs_three_values() {
        let k = Kernel::levy(0.3).unwrap();
        let base = vec![Index::point([1.0, 0.0])];
        assert!(fit_ss_order(&k, &base, &SsFamily::Dilation, &[1.0, 2.0]).is_err());
        let fit = fit_ss_order(&k, &base, &SsFamily::Dilation, &[0.5, 1.0, 2.0]).unwrap();
        assert!((fit.order - 0.3).abs() < 1e-12);
    }
}
