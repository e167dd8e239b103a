//! Discrete measure spaces `(T, m)` and the L² geometry they carry.
//!
//! A [`MeasureSpace`] is a finite list of weighted atoms in `R^d`. Functions
//! on it are [`L2Vec`]s, one coefficient per atom, and `m(f g)` is the
//! weighted sum [`l2_dot`]. Uniform grids of cell centres discretize
//! `(R_+^d, λ_d)`; for those, rectangle indicators converge to the exact
//! Lebesgue calculus of [`rect_measures`] as the grid is refined.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of atoms of a generated grid.
pub const DEFAULT_ATOM_BUDGET: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    dim: usize,
    /// Row-major `n_atoms × dim` coordinates.
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::arg("measure space dimension must be positive"));
        }
        if atoms.is_empty() {
            return Err(Error::arg("measure space needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let mut flat = Vec::with_capacity(atoms.len() * dim);
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::arg(format!("atom {i} has dimension {}, expected {dim}", a.len())));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::arg(format!("atom {i} has a non-finite coordinate")));
            }
            flat.extend_from_slice(a);
        }
        Self::from_parts(dim, flat, weights)
    }

    fn from_parts(dim: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::arg(format!("atom weights must be positive and finite, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !total.is_finite() {
            return Err(Error::arg("total mass is not finite"));
        }
        Ok(MeasureSpace { dim, atoms, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn to_desc(&self) -> SpaceDesc {
        SpaceDesc::Explicit {
            dim: self.dim,
            atoms: self.atoms().map(<[f64]>::to_vec).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Uniform grid of cell centres on `[0, extent]^d` with the default atom budget.
pub fn make_grid_space(d: usize, n_per_axis: usize, extent: f64) -> Result<MeasureSpace> {
    make_grid_space_with_budget(d, n_per_axis, extent, DEFAULT_ATOM_BUDGET)
}

pub fn make_grid_space_with_budget(
    d: usize,
    n_per_axis: usize,
    extent: f64,
    budget: u64,
) -> Result<MeasureSpace> {
    if d == 0 || n_per_axis == 0 {
        return Err(Error::arg("grid dimension and resolution must be positive"));
    }
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::arg(format!("grid extent must be positive, got {extent}")));
    }
    let n_atoms = u32::try_from(d)
        .ok()
        .and_then(|e| (n_per_axis as u64).checked_pow(e))
        .filter(|&n| n <= budget)
        .ok_or_else(|| {
            Error::Resource(format!(
                "grid {n_per_axis}^{d} exceeds the budget of {budget} atoms"
            ))
        })? as usize;

    let h = extent / n_per_axis as f64;
    let weight = h.powi(d as i32);
    let mut atoms = Vec::with_capacity(n_atoms * d);
    let mut idx = vec![0usize; d];
    for _ in 0..n_atoms {
        atoms.extend(idx.iter().map(|&k| (k as f64 + 0.5) * h));
        // odometer, last axis fastest
        for axis in (0..d).rev() {
            idx[axis] += 1;
            if idx[axis] < n_per_axis {
                break;
            }
            idx[axis] = 0;
        }
    }
    MeasureSpace::from_parts(d, atoms, vec![weight; n_atoms])
}

/// JSON description of a measure space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceDesc {
    Grid { grid: GridDesc },
    Explicit {
        dim: usize,
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDesc {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

impl SpaceDesc {
    pub fn build(&self) -> Result<MeasureSpace> {
        match self {
            SpaceDesc::Grid { grid } => make_grid_space(grid.dim, grid.n, grid.extent),
            SpaceDesc::Explicit { dim, atoms, weights } => {
                MeasureSpace::new(*dim, atoms.clone(), weights.clone())
            }
        }
    }
}

/// A real function on the atoms of a measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct L2Vec {
    space: Arc<MeasureSpace>,
    coeffs: Vec<f64>,
}

impl L2Vec {
    pub fn new(space: &Arc<MeasureSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.len() {
            return Err(Error::arg(format!(
                "{} coefficients for a space of {} atoms",
                coeffs.len(),
                space.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("L2 coefficients must be finite"));
        }
        Ok(L2Vec {
            space: Arc::clone(space),
            coeffs,
        })
    }

    pub fn zeros(space: &Arc<MeasureSpace>) -> Self {
        L2Vec {
            space: Arc::clone(space),
            coeffs: vec![0.0; space.len()],
        }
    }

    pub fn constant(space: &Arc<MeasureSpace>, value: f64) -> Self {
        L2Vec {
            space: Arc::clone(space),
            coeffs: vec![value; space.len()],
        }
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn same_space(&self, other: &L2Vec) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn check_same(&self, other: &L2Vec) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::arg("L2 vectors belong to different measure spaces"))
        }
    }

    fn zip_with(&self, other: &L2Vec, op: impl Fn(f64, f64) -> f64) -> Result<L2Vec> {
        self.check_same(other)?;
        Ok(L2Vec {
            space: Arc::clone(&self.space),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        })
    }

    pub fn try_add(&self, other: &L2Vec) -> Result<L2Vec> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &L2Vec) -> Result<L2Vec> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> L2Vec {
        L2Vec {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// `m(f²)`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.space.weights())
            .map(|(f, w)| w * f * f)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for &L2Vec {
    type Output = L2Vec;

    /// Panics on a space mismatch; use [`L2Vec::try_add`] for fallible code.
    fn add(self, rhs: &L2Vec) -> L2Vec {
        self.try_add(rhs).expect("L2 vectors on the same space")
    }
}

impl Sub for &L2Vec {
    type Output = L2Vec;

    fn sub(self, rhs: &L2Vec) -> L2Vec {
        self.try_sub(rhs).expect("L2 vectors on the same space")
    }
}

impl Mul<&L2Vec> for f64 {
    type Output = L2Vec;

    fn mul(self, rhs: &L2Vec) -> L2Vec {
        rhs.scale(self)
    }
}

/// `m(f g) = Σ_i w_i f_i g_i`.
pub fn l2_dot(space: &MeasureSpace, f: &L2Vec, g: &L2Vec) -> Result<f64> {
    let bound = |v: &L2Vec| std::ptr::eq(v.space.as_ref(), space) || *v.space == *space;
    if !bound(f) || !bound(g) {
        return Err(Error::arg("L2 vector is not bound to this measure space"));
    }
    Ok(f
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .zip(space.weights())
        .map(|((a, b), w)| w * a * b)
        .sum())
}

/// Anchored rectangle `[0, corner]` in `R_+^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Rect {
    corner: Vec<f64>,
}

impl Rect {
    pub fn new(corner: Vec<f64>) -> Result<Self> {
        if corner.is_empty() {
            return Err(Error::arg("rectangle corner must have at least one coordinate"));
        }
        if corner.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::arg(format!(
                "rectangle corner must be finite and nonnegative, got {corner:?}"
            )));
        }
        Ok(Rect { corner })
    }

    pub fn corner(&self) -> &[f64] {
        &self.corner
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// Lebesgue measure `∏ t_i`.
    pub fn volume(&self) -> f64 {
        self.corner.iter().product()
    }
}

impl TryFrom<Vec<f64>> for Rect {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Rect::new(v)
    }
}

impl From<Rect> for Vec<f64> {
    fn from(r: Rect) -> Self {
        r.corner
    }
}

/// Indicator of `[0, t]`: an atom belongs iff every coordinate is strictly
/// below the corresponding coordinate of `t`.
pub fn indicator_rect(space: &Arc<MeasureSpace>, t: &Rect) -> Result<L2Vec> {
    if t.dim() != space.dim() {
        return Err(Error::arg(format!(
            "rectangle of dimension {} on a space of dimension {}",
            t.dim(),
            space.dim()
        )));
    }
    let coeffs = space
        .atoms()
        .map(|a| {
            if a.iter().zip(t.corner()).all(|(x, c)| x < c) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(L2Vec {
        space: Arc::clone(space),
        coeffs,
    })
}

/// Exact Lebesgue measures of two anchored rectangles and their Boolean
/// combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectMeasures {
    pub lam_s: f64,
    pub lam_t: f64,
    pub lam_inter: f64,
    pub lam_symdiff: f64,
    pub lam_tminus_s: f64,
}

pub fn rect_measures(s: &Rect, t: &Rect) -> Result<RectMeasures> {
    if s.dim() != t.dim() {
        return Err(Error::arg(format!(
            "rectangles of dimensions {} and {}",
            s.dim(),
            t.dim()
        )));
    }
    let lam_s = s.volume();
    let lam_t = t.volume();
    let lam_inter: f64 = s
        .corner()
        .iter()
        .zip(t.corner())
        .map(|(a, b)| a.min(*b))
        .product();
    // inter ≤ min(lam_s, lam_t) holds exactly for products of minima, but
    // clamp anyway so rounding never yields a negative measure.
    Ok(RectMeasures {
        lam_s,
        lam_t,
        lam_inter,
        lam_symdiff: (lam_s + lam_t - 2.0 * lam_inter).max(0.0),
        lam_tminus_s: (lam_t - lam_inter).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: usize, n: usize, e: f64) -> Arc<MeasureSpace> {
        Arc::new(make_grid_space(d, n, e).unwrap())
    }

    #[test]
    fn grid_1d_cell_centres() {
        let s = make_grid_space(1, 4, 2.0).unwrap();
        let xs: Vec<f64> = s.atoms().map(|a| a[0]).collect();
        assert_eq!(xs, vec![0.25, 0.75, 1.25, 1.75]);
        assert!(s.weights().iter().all(|&w| w == 0.5));
        assert_eq!(s.total_mass(), 2.0);
    }

    #[test]
    fn grid_2d_weights() {
        let s = make_grid_space(2, 2, 1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.weights().iter().all(|&w| w == 0.25));
        assert_eq!(s.total_mass(), 1.0);
        assert_eq!(s.atom(1), &[0.25, 0.75]);
    }

    #[test]
    fn grid_budget_exceeded() {
        assert!(matches!(
            make_grid_space(1, 1_000_000_000, 1.0),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            make_grid_space(3, 1 << 20, 1.0),
            Err(Error::Resource(_))
        ));
        assert!(matches!(make_grid_space(0, 4, 1.0), Err(Error::Argument(_))));
        assert!(matches!(make_grid_space(1, 4, -1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(MeasureSpace::new(1, vec![vec![0.0]], vec![0.0]).is_err());
        assert!(MeasureSpace::new(1, vec![vec![0.0]], vec![f64::NAN]).is_err());
        assert!(MeasureSpace::new(1, vec![], vec![]).is_err());
        assert!(MeasureSpace::new(2, vec![vec![0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn dot_examples() {
        let s = grid(1, 4, 2.0);
        let one = L2Vec::constant(&s, 1.0);
        assert_eq!(l2_dot(&s, &one, &one).unwrap(), 2.0);

        let f = L2Vec::new(&s, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let g = L2Vec::new(&s, vec![0.0, 0.0, 3.0, -1.0]).unwrap();
        assert_eq!(l2_dot(&s, &f, &g).unwrap(), 0.0);
        assert_eq!(l2_dot(&s, &f, &f).unwrap(), 1.0);
    }

    #[test]
    fn dot_space_mismatch() {
        let a = grid(1, 4, 2.0);
        let b = grid(1, 4, 3.0);
        let f = L2Vec::constant(&a, 1.0);
        let g = L2Vec::constant(&b, 1.0);
        assert!(l2_dot(&a, &f, &g).is_err());
        assert!(f.try_add(&g).is_err());
        // structurally equal spaces are interchangeable
        let c = grid(1, 4, 2.0);
        assert!(l2_dot(&c, &f, &f).is_ok());
    }

    #[test]
    fn indicator_examples() {
        let s = grid(1, 4, 2.0);
        let zero = indicator_rect(&s, &Rect::new(vec![0.0]).unwrap()).unwrap();
        assert!(zero.coeffs().iter().all(|&c| c == 0.0));
        let full = indicator_rect(&s, &Rect::new(vec![2.0]).unwrap()).unwrap();
        assert!(full.coeffs().iter().all(|&c| c == 1.0));
        let half = indicator_rect(&s, &Rect::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(half.coeffs(), &[1.0, 1.0, 0.0, 0.0]);
        assert!(indicator_rect(&s, &Rect::new(vec![1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn rect_measure_examples() {
        let r = |v: &[f64]| Rect::new(v.to_vec()).unwrap();
        let same = rect_measures(&r(&[1.5, 0.5]), &r(&[1.5, 0.5])).unwrap();
        assert_eq!(same.lam_symdiff, 0.0);

        let m = rect_measures(&r(&[1.0, 2.0]), &r(&[2.0, 1.0])).unwrap();
        assert_eq!((m.lam_s, m.lam_t, m.lam_inter, m.lam_symdiff), (2.0, 2.0, 1.0, 2.0));

        let m = rect_measures(&r(&[1.0, 1.0]), &r(&[2.0, 2.0])).unwrap();
        assert_eq!(m.lam_tminus_s, 3.0);

        assert!(rect_measures(&r(&[1.0]), &r(&[1.0, 1.0])).is_err());
        assert!(Rect::new(vec![-1.0]).is_err());
    }

    #[test]
    fn space_desc_json() {
        let desc: SpaceDesc =
            serde_json::from_str(r#"{"grid": {"dim": 1, "n": 4, "extent": 2}}"#).unwrap();
        assert_eq!(desc.build().unwrap().len(), 4);
        let desc: SpaceDesc = serde_json::from_str(
            r#"{"dim": 1, "atoms": [[0.0], [1.0]], "weights": [0.5, 2.0]}"#,
        )
        .unwrap();
        let s = desc.build().unwrap();
        assert_eq!(s.total_mass(), 2.5);
        assert_eq!(s.to_desc(), desc);
    }
}
