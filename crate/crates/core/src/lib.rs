//! Covariance kernels, set-indexed measure constructions, spectral
//! decompositions and executable stationarity / self-similarity checks for
//! the fractional-Brownian family of Gaussian fields.

pub mod characterize;
pub mod error;
pub mod index;
pub mod kernels;
pub mod linalg;
pub mod measure_space;
pub mod report;
pub mod sampler;
pub mod seeding;
pub mod set_models;
pub mod spectral;
pub mod stationarity;
pub mod stats;
pub mod suite;

pub use error::{Error, Result};
pub use index::Index;
pub use kernels::{gram, Covariance, Gram, IncrementKind, Kernel, KernelSpec};
pub use measure_space::{L2Vec, MeasureSpace, Rect};
pub use report::{Report, Status};
