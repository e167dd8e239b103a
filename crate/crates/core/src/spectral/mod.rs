//! Finite-dimensional spectral checks: Schoenberg positive-definiteness, the
//! one-dimensional Lévy–Khintchine integral, simulated random measures and
//! spectral synthesis of fBm.

pub mod levy_khintchine;
pub mod quadrature;
pub mod random_measure;
pub mod schoenberg;
pub mod synthesis;

pub use levy_khintchine::{lk_constant, lk_integral, lk_integral_alt, lk_scaling_check};
pub use random_measure::{simulate_random_measure, Cell, DiscreteRandomMeasure};
pub use schoenberg::{schoenberg_check, Variogram};
pub use synthesis::{grid_increment_variance, spectral_synth_check, synth_fbm_spectral, FreqGrid, FreqGridDesc};
