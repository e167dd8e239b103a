//! Index elements: points of `R^d` or functions in `L²(T, m)`.

use crate::error::{Error, Result};
use crate::measure_space::L2Vec;

#[derive(Debug, Clone, PartialEq)]
pub enum Index {
    Point(Vec<f64>),
    Func(L2Vec),
}

impl Index {
    pub fn point(coords: impl Into<Vec<f64>>) -> Self {
        Index::Point(coords.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Index::Point(_) => "point",
            Index::Func(_) => "function",
        }
    }

    pub fn as_point(&self) -> Result<&[f64]> {
        match self {
            Index::Point(p) => Ok(p),
            Index::Func(_) => Err(Error::arg("expected a point index, got an L2 function")),
        }
    }

    pub fn as_func(&self) -> Result<&L2Vec> {
        match self {
            Index::Func(f) => Ok(f),
            Index::Point(_) => Err(Error::arg("expected an L2 function index, got a point")),
        }
    }

    /// Dimension of the ambient vector space (atoms count for functions).
    pub fn dim(&self) -> usize {
        match self {
            Index::Point(p) => p.len(),
            Index::Func(f) => f.coeffs().len(),
        }
    }

    /// Squared norm: Euclidean for points, `m(f²)` for functions.
    pub fn norm_sq(&self) -> f64 {
        match self {
            Index::Point(p) => p.iter().map(|x| x * x).sum(),
            Index::Func(f) => f.norm_sq(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn zero_like(&self) -> Index {
        match self {
            Index::Point(p) => Index::Point(vec![0.0; p.len()]),
            Index::Func(f) => Index::Func(L2Vec::zeros(f.space())),
        }
    }

    pub fn try_add(&self, other: &Index) -> Result<Index> {
        match (self, other) {
            (Index::Point(a), Index::Point(b)) => {
                check_dims(a, b)?;
                Ok(Index::Point(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (Index::Func(a), Index::Func(b)) => Ok(Index::Func(a.try_add(b)?)),
            _ => Err(mixed()),
        }
    }

    pub fn try_sub(&self, other: &Index) -> Result<Index> {
        match (self, other) {
            (Index::Point(a), Index::Point(b)) => {
                check_dims(a, b)?;
                Ok(Index::Point(a.iter().zip(b).map(|(x, y)| x - y).collect()))
            }
            (Index::Func(a), Index::Func(b)) => Ok(Index::Func(a.try_sub(b)?)),
            _ => Err(mixed()),
        }
    }

    pub fn scale(&self, c: f64) -> Index {
        match self {
            Index::Point(p) => Index::Point(p.iter().map(|x| c * x).collect()),
            Index::Func(f) => Index::Func(f.scale(c)),
        }
    }

    /// Squared norm of `self − other` without allocating for points.
    pub fn dist_sq(&self, other: &Index) -> Result<f64> {
        match (self, other) {
            (Index::Point(a), Index::Point(b)) => {
                check_dims(a, b)?;
                Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
            }
            (Index::Func(a), Index::Func(b)) => {
                if !a.same_space(b) {
                    return Err(Error::arg("L2 vectors belong to different measure spaces"));
                }
                Ok(a.coeffs()
                    .iter()
                    .zip(b.coeffs())
                    .zip(a.space().weights())
                    .map(|((x, y), w)| w * (x - y) * (x - y))
                    .sum())
            }
            _ => Err(mixed()),
        }
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "index dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )))
    }
}

fn mixed() -> Error {
    Error::arg("cannot combine a point index with an L2 function index")
}

impl From<L2Vec> for Index {
    fn from(f: L2Vec) -> Self {
        Index::Func(f)
    }
}

impl From<Vec<f64>> for Index {
    fn from(p: Vec<f64>) -> Self {
        Index::Point(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_space::make_grid_space;
    use std::sync::Arc;

    #[test]
    fn point_arithmetic() {
        let a = Index::point([3.0, 4.0]);
        let b = Index::point([0.0, 0.0]);
        assert_eq!(a.dist_sq(&b).unwrap(), 25.0);
        assert_eq!(a.try_sub(&b).unwrap().norm(), 5.0);
        assert!(a.try_add(&Index::point([1.0])).is_err());
    }

    #[test]
    fn mixed_kinds_rejected() {
        let s = Arc::new(make_grid_space(1, 2, 1.0).unwrap());
        let f = Index::Func(L2Vec::constant(&s, 1.0));
        let p = Index::point([1.0, 1.0]);
        assert!(f.try_add(&p).is_err());
        assert!(f.dist_sq(&p).is_err());
        assert_eq!(f.norm_sq(), 1.0);
    }
}
