//! JSON run configuration. The `command` field selects the variant; every
//! variant rejects unknown fields.

use std::sync::Arc;

use l2field::characterize::CharacterizeMode;
use l2field::measure_space::{indicator_rect, SpaceDesc};
use l2field::spectral::random_measure::Cell;
use l2field::spectral::FreqGridDesc;
use l2field::{Index, Kernel, KernelSpec, L2Vec, MeasureSpace, Rect};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// An index element as written in a config: a point `[x, y]`, a coefficient
/// vector `{"func": [...]}` or the indicator of `[0, t]`, `{"indicator": t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexSpec {
    Point(Vec<f64>),
    Func { func: Vec<f64> },
    Indicator { indicator: Vec<f64> },
}

impl IndexSpec {
    pub fn build(&self, space: Option<&Arc<MeasureSpace>>) -> Result<Index, CliError> {
        let need = || CliError::Config("function indices need a measure space".into());
        Ok(match self {
            IndexSpec::Point(p) => Index::point(p.clone()),
            IndexSpec::Func { func } => Index::Func(L2Vec::new(space.ok_or_else(need)?, func.clone())?),
            IndexSpec::Indicator { indicator } => {
                Index::Func(indicator_rect(space.ok_or_else(need)?, &Rect::new(indicator.clone())?)?)
            }
        })
    }
}

/// A design: explicit indices or a regular grid of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignSpec {
    Grid { grid: PointGrid },
    List(Vec<IndexSpec>),
}

/// `n` points per axis, equispaced on `[lo, hi]` in each of `dim` axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointGrid {
    pub dim: usize,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl DesignSpec {
    pub fn build(&self, space: Option<&Arc<MeasureSpace>>) -> Result<Vec<Index>, CliError> {
        match self {
            DesignSpec::List(items) => items.iter().map(|i| i.build(space)).collect(),
            DesignSpec::Grid { grid } => {
                if grid.dim == 0 || grid.n == 0 || !(grid.hi > grid.lo) {
                    return Err(CliError::Config("point grid needs dim, n > 0 and lo < hi".into()));
                }
                let count = grid
                    .n
                    .checked_pow(grid.dim as u32)
                    .filter(|&c| c <= 4096)
                    .ok_or_else(|| CliError::Config("point grid larger than 4096 points".into()))?;
                let step = if grid.n == 1 { 0.0 } else { (grid.hi - grid.lo) / (grid.n - 1) as f64 };
                Ok((0..count)
                    .map(|mut k| {
                        let mut p = vec![0.0; grid.dim];
                        for axis in (0..grid.dim).rev() {
                            p[axis] = grid.lo + step * (k % grid.n) as f64;
                            k /= grid.n;
                        }
                        Index::point(p)
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    Dilation,
    ScaledOrthogonal,
    MpDilation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunConfig {
    Gram {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        design: DesignSpec,
    },
    Sample {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        design: DesignSpec,
        n_paths: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    VerifyKernel {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        design: DesignSpec,
        #[serde(default = "default_psd_tol")]
        psd_tol: f64,
    },
    VerifySi1 {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        pairs: Vec<(IndexSpec, IndexSpec)>,
        #[serde(default = "default_n_maps")]
        n_transforms: usize,
        #[serde(default = "default_scale")]
        translation_scale: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    VerifySi2 {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        pairs: Vec<(IndexSpec, IndexSpec)>,
        /// Explicit shifts; random ones (needing a seed) when absent.
        #[serde(default)]
        shifts: Option<Vec<IndexSpec>>,
        #[serde(default = "default_n_maps")]
        n_shifts: usize,
        #[serde(default = "default_scale")]
        translation_scale: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    VerifySs {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        base: Vec<IndexSpec>,
        family: FamilySpec,
        values: Vec<f64>,
    },
    VerifySheet {
        #[serde(rename = "Hvec")]
        hurst: Vec<f64>,
        /// `(lower, upper)` corners.
        rects: Vec<(Vec<f64>, Vec<f64>)>,
        shifts: Vec<Vec<f64>>,
    },
    VerifyMeasureSi {
        #[serde(rename = "H")]
        hurst: f64,
        #[serde(default)]
        t0: Option<Vec<f64>>,
        #[serde(default)]
        t_list: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        tau_list: Option<Vec<Vec<f64>>>,
        /// One-point form triples `(t, t′, τ)`.
        #[serde(default)]
        one_point: Option<Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>>,
    },
    Takenaka {
        d: usize,
        #[serde(rename = "H")]
        hurst: f64,
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        n_samples: usize,
        #[serde(default)]
        proposal_scale: Option<f64>,
        /// Allowed deviation of the fitted log-log slope from `2H`.
        #[serde(default = "default_slope_tol")]
        slope_tol: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Chentsov {
        d: usize,
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        n_samples: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    SpectralSynth {
        #[serde(rename = "H")]
        hurst: f64,
        tgrid: Vec<f64>,
        #[serde(default)]
        grid: FreqGridDesc,
        n_paths: usize,
        #[serde(default = "default_cov_tol")]
        cov_tol: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    SpectralLk {
        alpha: f64,
        xi_list: Vec<f64>,
        #[serde(default = "default_quad_tol")]
        quad_tol: f64,
    },
    Schoenberg {
        alpha: f64,
        design: Vec<Vec<f64>>,
        t_list: Vec<f64>,
    },
    RandomMeasure {
        cells: Vec<Cell>,
        n_reps: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Rkhs {
        kernel: KernelSpec,
        #[serde(default)]
        space: Option<SpaceDesc>,
        design: DesignSpec,
        #[serde(default)]
        coeffs: Vec<Vec<f64>>,
        #[serde(default)]
        targets: Vec<Vec<f64>>,
    },
    Characterize {
        mode: CharacterizeMode,
        #[serde(default)]
        space: Option<SpaceDesc>,
        #[serde(default)]
        phi_samples: Vec<(IndexSpec, f64)>,
        #[serde(default)]
        cov_samples: Vec<((IndexSpec, IndexSpec), f64)>,
        /// CSV with columns `index,value`, the index as inline JSON.
        #[serde(default)]
        phi_csv: Option<String>,
        /// CSV with columns `a,b,value`.
        #[serde(default)]
        cov_csv: Option<String>,
    },
    All {
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_psd_tol() -> f64 {
    1e-8
}
fn default_n_maps() -> usize {
    20
}
fn default_scale() -> f64 {
    1.0
}
fn default_slope_tol() -> f64 {
    0.03
}
fn default_cov_tol() -> f64 {
    0.02
}
fn default_quad_tol() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Gram { .. } => "gram",
            RunConfig::Sample { .. } => "sample",
            RunConfig::VerifyKernel { .. } => "verify-kernel",
            RunConfig::VerifySi1 { .. } => "verify-si1",
            RunConfig::VerifySi2 { .. } => "verify-si2",
            RunConfig::VerifySs { .. } => "verify-ss",
            RunConfig::VerifySheet { .. } => "verify-sheet",
            RunConfig::VerifyMeasureSi { .. } => "verify-measure-si",
            RunConfig::Takenaka { .. } => "takenaka",
            RunConfig::Chentsov { .. } => "chentsov",
            RunConfig::SpectralSynth { .. } => "spectral-synth",
            RunConfig::SpectralLk { .. } => "spectral-lk",
            RunConfig::Schoenberg { .. } => "schoenberg",
            RunConfig::RandomMeasure { .. } => "random-measure",
            RunConfig::Rkhs { .. } => "rkhs",
            RunConfig::Characterize { .. } => "characterize",
            RunConfig::All { .. } => "all",
        }
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            RunConfig::Sample { seed, .. }
            | RunConfig::VerifySi1 { seed, .. }
            | RunConfig::Takenaka { seed, .. }
            | RunConfig::Chentsov { seed, .. }
            | RunConfig::SpectralSynth { seed, .. }
            | RunConfig::RandomMeasure { seed, .. }
            | RunConfig::All { seed } => Some(seed),
            RunConfig::VerifySi2 { seed, shifts, .. } => {
                if shifts.is_some() {
                    None
                } else {
                    Some(seed)
                }
            }
            _ => None,
        }
    }

    /// Apply a `--seed` override, then require a seed wherever draws happen.
    /// `all` falls back to the suite's default seed.
    pub fn resolve_seed(&mut self, flag: Option<u64>) -> Result<Option<u64>, CliError> {
        let is_all = matches!(self, RunConfig::All { .. });
        let Some(slot) = self.seed_slot() else {
            return Ok(None);
        };
        if flag.is_some() {
            *slot = flag;
        }
        if slot.is_none() && is_all {
            *slot = Some(l2field::suite::SUITE_SEED);
        }
        match *slot {
            Some(s) => Ok(Some(s)),
            None => Err(CliError::Config(format!(
                "command '{}' is stochastic and needs a seed (config field or --seed)",
                self.name()
            ))),
        }
    }

    /// Tolerances must be positive.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            RunConfig::VerifyKernel { psd_tol, .. } => bad("psd_tol", *psd_tol),
            RunConfig::VerifySi1 { translation_scale, .. } | RunConfig::VerifySi2 { translation_scale, .. } => {
                bad("translation_scale", *translation_scale)
            }
            RunConfig::SpectralSynth { cov_tol, .. } => bad("cov_tol", *cov_tol),
            RunConfig::Takenaka { slope_tol, .. } => bad("slope_tol", *slope_tol),
            RunConfig::SpectralLk { quad_tol, .. } => bad("quad_tol", *quad_tol),
            RunConfig::Characterize { phi_csv, cov_csv, .. } => {
                for p in phi_csv.iter().chain(cov_csv) {
                    if !std::path::Path::new(p).is_file() {
                        return Err(CliError::Config(format!("referenced file '{p}' does not exist")));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The kernel and the measure space its function indices live on.
pub fn build_kernel(
    spec: &KernelSpec,
    space: &Option<SpaceDesc>,
) -> Result<(Kernel, Option<Arc<MeasureSpace>>), CliError> {
    let top = space.as_ref().map(|d| d.build().map(Arc::new)).transpose()?;
    let kernel = spec.build(top.as_ref())?;
    let space = match &kernel {
        Kernel::L2Fbm { space, .. } => Some(Arc::clone(space)),
        _ => top,
    };
    Ok((kernel, space))
}
