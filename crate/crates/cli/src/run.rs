//! Dispatch of a validated configuration to the library checks.

use std::fs;
use std::sync::Arc;

use l2field::characterize::{
    characterize_fractional, linear_extend, linear_process_si2_check, rkhs_check, LinearProcess, RkhsModel,
    Verdict,
};
use l2field::measure_space::SpaceDesc;
use l2field::sampler::{cholesky_factor, empirical_cov_compare, empirical_mean_check, sample_paths, MIN_COMPARE_PATHS};
use l2field::seeding::sub_seed;
use l2field::set_models::{chentsov_symdiff_measure, exponent_fit, takenaka_symdiff_measure, McConfig};
use l2field::spectral::{lk_scaling_check, schoenberg_check, simulate_random_measure, spectral_synth_check, Variogram};
use l2field::stationarity::{
    check_si, fit_ss_order, measure_si_check, measure_si_one_point, seeded_orthogonal, seeded_translation,
    sheet_increment_check, IncrementSpec, L2Transform, SiMode, SsFamily,
};
use l2field::suite::{run_all, CriterionOutcome};
use l2field::{gram, Index, MeasureSpace, Report, Status};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{build_kernel, FamilySpec, IndexSpec, RunConfig};
use crate::CliError;

pub enum Artifact {
    Matrix(&'static str, DMatrix<f64>),
    Paths(&'static str, DMatrix<f64>),
}

#[derive(Serialize)]
pub struct ReportBundle {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Effective configuration, seed included, for replay.
    pub config: RunConfig,
    pub pass: bool,
    pub reports: Vec<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionOutcome>,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

struct Output {
    reports: Vec<Report>,
    result: Option<serde_json::Value>,
    criteria: Vec<CriterionOutcome>,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn reports(reports: Vec<Report>) -> Self {
        Output {
            reports,
            result: None,
            criteria: Vec::new(),
            artifacts: Vec::new(),
        }
    }
}

/// Run `config`. Numeric library failures become a failing report; every
/// other error propagates.
pub fn execute(config: RunConfig, seed: Option<u64>) -> Result<ReportBundle, CliError> {
    let out = match dispatch(&config, seed) {
        Ok(out) => out,
        Err(CliError::Core(e @ (l2field::Error::Numeric { .. } | l2field::Error::NotRepresentable { .. }))) => {
            let mut r = Report::new(config.name());
            if let l2field::Error::Numeric { min_eig: Some(m), .. } = &e {
                r.stat("min_eig", *m);
            }
            if let Some(s) = seed {
                r = r.with_seed(s);
            }
            r.fail(e.to_string());
            Output::reports(vec![r])
        }
        Err(e) => return Err(e),
    };
    let pass = out.reports.iter().all(|r| r.pass) && out.criteria.iter().all(|c| c.passed());
    Ok(ReportBundle {
        command: config.name().to_string(),
        seed,
        config,
        pass,
        reports: out.reports,
        result: out.result,
        criteria: out.criteria,
        artifacts: out.artifacts,
    })
}

fn build_pairs(pairs: &[(IndexSpec, IndexSpec)], space: Option<&Arc<MeasureSpace>>) -> Result<IncrementSpec, CliError> {
    let built = pairs
        .iter()
        .map(|(a, b)| Ok((a.build(space)?, b.build(space)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(IncrementSpec::new(built)?)
}

fn seed_of(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Config("missing seed".into()))
}

fn distance(t: &[f64], s: &[f64]) -> f64 {
    t.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn dispatch(config: &RunConfig, seed: Option<u64>) -> Result<Output, CliError> {
    Ok(match config {
        RunConfig::Gram { kernel, space, design } => {
            let (k, sp) = build_kernel(kernel, space)?;
            let g = gram(&k, &design.build(sp.as_ref())?)?;
            let mut r = Report::new("gram-psd").with_mode(l2field::Covariance::label(&k));
            r.stat("min_eig", g.min_eig);
            r.stat("trace", g.trace());
            r.stat("size", g.design_size as f64);
            r.tolerance = Some(1e-8);
            if !g.is_psd(1e-8) {
                r.fail(format!("Gram is indefinite: min_eig {:e}", g.min_eig));
            }
            Output {
                artifacts: vec![Artifact::Matrix("gram.csv", g.matrix)],
                ..Output::reports(vec![r])
            }
        }
        RunConfig::Sample {
            kernel,
            space,
            design,
            n_paths,
            ..
        } => {
            let seed = seed_of(seed)?;
            let (k, sp) = build_kernel(kernel, space)?;
            let g = gram(&k, &design.build(sp.as_ref())?)?;
            let factor = cholesky_factor(&g)?;
            let paths = sample_paths(&factor, *n_paths, seed)?;
            let mut reports = Vec::new();
            if *n_paths >= MIN_COMPARE_PATHS {
                let mut c = empirical_cov_compare(&paths, &g)?;
                c.stat("jitter_applied", factor.jitter_applied);
                reports.push(c);
                reports.push(empirical_mean_check(&paths, &g)?);
            }
            Output {
                artifacts: vec![Artifact::Paths("paths.csv", paths.values)],
                ..Output::reports(reports)
            }
        }
        RunConfig::VerifyKernel {
            kernel,
            space,
            design,
            psd_tol,
        } => {
            let (k, sp) = build_kernel(kernel, space)?;
            let pts = design.build(sp.as_ref())?;
            let g = gram(&k, &pts)?;
            let mut r = Report::new("kernel-psd").with_mode(l2field::Covariance::label(&k));
            r.stat("min_eig", g.min_eig);
            r.stat("trace", g.trace());
            r.tolerance = Some(*psd_tol);
            if !g.is_psd(*psd_tol) {
                r.fail(format!("min_eig {:e} below -{psd_tol:e} * trace", g.min_eig));
            }
            let neg_var = (0..g.design_size).map(|i| g.matrix[(i, i)]).fold(f64::INFINITY, f64::min);
            r.stat("min_variance", neg_var);
            if neg_var < 0.0 {
                r.fail("negative variance on the diagonal");
            }
            Output {
                artifacts: vec![Artifact::Matrix("gram.csv", g.matrix)],
                ..Output::reports(vec![r])
            }
        }
        RunConfig::VerifySi1 {
            kernel,
            space,
            pairs,
            n_transforms,
            translation_scale,
            ..
        } => {
            let seed = seed_of(seed)?;
            let (k, sp) = build_kernel(kernel, space)?;
            let spec = build_pairs(pairs, sp.as_ref())?;
            let like = spec.pairs[0].0.clone();
            let maps = (0..*n_transforms as u64)
                .map(|i| {
                    let q = seeded_orthogonal(&like, seed, 2 * i)?;
                    let h = seeded_translation(&like, *translation_scale, seed, 2 * i + 1)?;
                    Ok(q.then(h))
                })
                .collect::<Result<Vec<L2Transform>, l2field::Error>>()?;
            Output::reports(vec![check_si(&k, &spec, &maps, SiMode::Si1)?.with_seed(seed)])
        }
        RunConfig::VerifySi2 {
            kernel,
            space,
            pairs,
            shifts,
            n_shifts,
            translation_scale,
            ..
        } => {
            let (k, sp) = build_kernel(kernel, space)?;
            let spec = build_pairs(pairs, sp.as_ref())?;
            let like = spec.pairs[0].0.clone();
            let maps = match shifts {
                Some(list) => list
                    .iter()
                    .map(|h| Ok(L2Transform::Translation(h.build(sp.as_ref())?)))
                    .collect::<Result<Vec<_>, CliError>>()?,
                None => {
                    let seed = seed_of(seed)?;
                    (0..*n_shifts as u64)
                        .map(|i| seeded_translation(&like, *translation_scale, seed, i))
                        .collect::<Result<Vec<_>, l2field::Error>>()?
                }
            };
            let mut r = check_si(&k, &spec, &maps, SiMode::Si2)?;
            if let Some(s) = seed {
                r = r.with_seed(s);
            }
            Output::reports(vec![r])
        }
        RunConfig::VerifySs {
            kernel,
            space,
            base,
            family,
            values,
        } => {
            let (k, sp) = build_kernel(kernel, space)?;
            let base = base.iter().map(|b| b.build(sp.as_ref())).collect::<Result<Vec<Index>, _>>()?;
            let fam = match family {
                FamilySpec::Dilation => SsFamily::Dilation,
                FamilySpec::ScaledOrthogonal => SsFamily::ScaledOrthogonal(None),
                FamilySpec::MpDilation => SsFamily::MpDilation,
            };
            let fit = fit_ss_order(&k, &base, &fam, values)?;
            Output {
                result: Some(serde_json::json!({ "order": fit.order })),
                ..Output::reports(vec![fit.report])
            }
        }
        RunConfig::VerifySheet { hurst, rects, shifts } => {
            Output::reports(vec![sheet_increment_check(hurst, rects, shifts)?])
        }
        RunConfig::VerifyMeasureSi {
            hurst,
            t0,
            t_list,
            tau_list,
            one_point,
        } => {
            let mut reports = Vec::new();
            match (t0, t_list, tau_list) {
                (Some(t0), Some(ts), Some(taus)) => reports.push(measure_si_check(*hurst, t0, ts, taus)?),
                (None, None, None) => {}
                _ => {
                    return Err(CliError::Config(
                        "n-point form needs all of t0, t_list and tau_list".into(),
                    ))
                }
            }
            for (t, tp, tau) in one_point.iter().flatten() {
                reports.push(measure_si_one_point(*hurst, t, tp, tau)?);
            }
            if reports.is_empty() {
                return Err(CliError::Config("nothing to check: give the n-point lists or one_point".into()));
            }
            Output::reports(reports)
        }
        RunConfig::Takenaka {
            d,
            hurst,
            pairs,
            n_samples,
            proposal_scale,
            slope_tol,
            ..
        } => {
            let seed = seed_of(seed)?;
            let mut estimates = Vec::new();
            for (k, (t, s)) in pairs.iter().enumerate() {
                let cfg = McConfig {
                    n_samples: *n_samples,
                    seed: sub_seed(seed, k as u64),
                    proposal_scale: *proposal_scale,
                };
                estimates.push((distance(t, s), takenaka_symdiff_measure(*d, *hurst, t, s, &cfg)?));
            }
            let mut r = Report::new("takenaka-scaling").with_seed(seed);
            r.stat("expected_slope", 2.0 * hurst);
            let mut distinct: Vec<f64> = estimates.iter().map(|e| e.0).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() >= 3 {
                let fit = exponent_fit(&estimates)?;
                r.stat("slope", fit.slope);
                r.stat("r2", fit.r2);
                r.judge((fit.slope - 2.0 * hurst).abs(), *slope_tol);
            } else {
                r.detail("fewer than 3 distinct distances: no slope fitted");
            }
            let rows: Vec<_> = estimates
                .iter()
                .map(|(dist, e)| serde_json::json!({ "distance": dist, "estimate": e }))
                .collect();
            Output {
                result: Some(serde_json::Value::Array(rows)),
                ..Output::reports(vec![r])
            }
        }
        RunConfig::Chentsov { d, pairs, n_samples, .. } => {
            let seed = seed_of(seed)?;
            let mut reports = Vec::new();
            let mut rows = Vec::new();
            for (k, (t, s)) in pairs.iter().enumerate() {
                let cfg = McConfig::new(*n_samples, sub_seed(seed, k as u64));
                let e = chentsov_symdiff_measure(*d, t, s, &cfg)?;
                let dist = distance(t, s);
                let mut r = Report::new("chentsov-calibration").with_seed(cfg.seed);
                if dist > 0.0 {
                    let ratio = e.value / dist;
                    r.stat("ratio", ratio);
                    r.judge((ratio - 1.0).abs(), (3.0 * e.stderr / dist).max(1e-12));
                } else {
                    r.judge(e.value.abs(), 1e-12);
                }
                rows.push(serde_json::json!({ "distance": dist, "estimate": e }));
                reports.push(r);
            }
            Output {
                result: Some(serde_json::Value::Array(rows)),
                ..Output::reports(reports)
            }
        }
        RunConfig::SpectralSynth {
            hurst,
            tgrid,
            grid,
            n_paths,
            cov_tol,
            ..
        } => {
            let seed = seed_of(seed)?;
            Output::reports(vec![spectral_synth_check(
                *hurst,
                tgrid,
                &grid.build()?,
                *n_paths,
                seed,
                *cov_tol,
            )?])
        }
        RunConfig::SpectralLk {
            alpha,
            xi_list,
            quad_tol,
        } => Output::reports(vec![lk_scaling_check(*alpha, xi_list, *quad_tol)?]),
        RunConfig::Schoenberg { alpha, design, t_list } => {
            Output::reports(vec![schoenberg_check(&Variogram::power(*alpha)?, design, t_list)?])
        }
        RunConfig::RandomMeasure { cells, n_reps, .. } => {
            Output::reports(vec![simulate_random_measure(cells, *n_reps, seed_of(seed)?)?])
        }
        RunConfig::Rkhs {
            kernel,
            space,
            design,
            coeffs,
            targets,
        } => {
            let (k, sp) = build_kernel(kernel, space)?;
            let model = RkhsModel::new(&k, design.build(sp.as_ref())?)?;
            let mut reports = coeffs
                .iter()
                .map(|c| rkhs_check(&model, c))
                .collect::<Result<Vec<_>, _>>()?;
            let mut extended = Vec::new();
            for t in targets {
                let a = linear_extend(&model, t)?;
                extended.push(a.iter().copied().collect::<Vec<f64>>());
            }
            if targets.len() >= 3 {
                let process = LinearProcess::new(&model, targets)?;
                let n = targets.len();
                let pairs: Vec<(usize, usize)> = (0..n - 2).map(|i| (i, i + 1)).collect();
                reports.push(linear_process_si2_check(&process, &pairs, &[n - 1])?);
            }
            Output {
                result: Some(serde_json::json!({ "rank": model.rank, "coefficients": extended })),
                artifacts: vec![Artifact::Matrix("gram.csv", model.gram_c.clone())],
                ..Output::reports(reports)
            }
        }
        RunConfig::Characterize {
            mode,
            space,
            phi_samples,
            cov_samples,
            phi_csv,
            cov_csv,
        } => {
            let sp = space.as_ref().map(|d: &SpaceDesc| d.build().map(Arc::new)).transpose()?;
            let mut phi = phi_samples
                .iter()
                .map(|(i, v)| Ok((i.build(sp.as_ref())?, *v)))
                .collect::<Result<Vec<_>, CliError>>()?;
            let mut cov = cov_samples
                .iter()
                .map(|((a, b), v)| Ok(((a.build(sp.as_ref())?, b.build(sp.as_ref())?), *v)))
                .collect::<Result<Vec<_>, CliError>>()?;
            if let Some(path) = phi_csv {
                for rec in read_csv(path, 2)? {
                    phi.push((parse_index(&rec[0], sp.as_ref())?, parse_real(&rec[1])?));
                }
            }
            if let Some(path) = cov_csv {
                for rec in read_csv(path, 3)? {
                    let a = parse_index(&rec[0], sp.as_ref())?;
                    let b = parse_index(&rec[1], sp.as_ref())?;
                    cov.push(((a, b), parse_real(&rec[2])?));
                }
            }
            let c = characterize_fractional(&phi, &cov, *mode)?;
            let result = serde_json::json!({
                "verdict": c.verdict,
                "fitted_order": c.fitted_order,
                "sigma2": c.sigma2,
                "kernel_H": c.kernel_h,
                "ss1_order": c.ss1_order,
                "ss2_order": c.ss2_order,
            });
            debug_assert_eq!(c.report.pass, c.verdict == Verdict::Accept);
            Output {
                result: Some(result),
                ..Output::reports(vec![c.report])
            }
        }
        RunConfig::All { .. } => {
            let outcomes = run_all(seed_of(seed)?)?;
            let reports = outcomes
                .iter()
                .map(|o| {
                    let mut r = Report::new(format!("criterion {}", o.id)).with_mode(o.name.clone());
                    r.detail(o.summary.clone());
                    if !o.within_budget() {
                        r.detail("runtime over budget");
                    }
                    r.set_status(if o.passed() { Status::Pass } else { Status::Fail });
                    r
                })
                .collect();
            Output {
                criteria: outcomes,
                ..Output::reports(reports)
            }
        }
    })
}

fn read_csv(path: &str, columns: usize) -> Result<Vec<csv::StringRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        if rec.len() != columns {
            return Err(CliError::Config(format!(
                "{path}: expected {columns} columns, found {}",
                rec.len()
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

fn parse_index(field: &str, space: Option<&Arc<MeasureSpace>>) -> Result<Index, CliError> {
    let spec: IndexSpec =
        serde_json::from_str(field).map_err(|e| CliError::Config(format!("bad index '{field}': {e}")))?;
    spec.build(space)
}

fn parse_real(field: &str) -> Result<f64, CliError> {
    field
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad number '{field}'")))
}
