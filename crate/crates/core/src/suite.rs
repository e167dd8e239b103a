//! The acceptance suite: fifteen criteria, each a self-contained run over
//! fixed designs and a run seed, returning a verdict and its reports.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characterize::{
    characterize_fractional, linear_process_si2_check, rkhs_check, CharacterizeMode, LinearProcess, RkhsModel,
    Verdict,
};
use crate::error::{Error, Result};
use crate::index::Index;
use crate::kernels::{cov_mpfbm, cov_sheet, gram, Covariance, Kernel};
use crate::measure_space::{indicator_rect, make_grid_space, MeasureSpace, Rect};
use crate::report::{Report, Status};
use crate::sampler::{cholesky_factor, empirical_cov_compare, sample_paths};
use crate::seeding::{sub_seed, unit_rng, with_threads};
use crate::set_models::{chentsov_symdiff_measure, exponent_fit, takenaka_symdiff_measure, McConfig};
use crate::spectral::random_measure::Cell;
use crate::spectral::{lk_scaling_check, schoenberg_check, simulate_random_measure, spectral_synth_check};
use crate::spectral::{FreqGridDesc, Variogram};
use crate::stationarity::{
    check_si, fit_ss_order, func, measure_si_check, measure_si_one_point, seeded_orthogonal, seeded_translation,
    IncrementSpec, SiMode, SsFamily,
};

/// Default run seed of the suite.
pub const SUITE_SEED: u64 = 20_240_917;

/// Criteria whose outcome depends on random draws.
pub const STOCHASTIC: [u32; 5] = [6, 7, 8, 10, 11];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    /// Numerical verdict, independent of timing.
    pub pass: bool,
    pub summary: String,
    pub reports: Vec<Report>,
    /// Wall-clock seconds; excluded from determinism comparisons.
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub budget: Duration,
}

impl CriterionOutcome {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    /// Numerical verdict and runtime budget both met.
    pub fn passed(&self) -> bool {
        self.pass && self.within_budget()
    }

    /// One-line verdict for logs.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<34} {}  ({:.2}s, budget {}s{}) {}",
            self.id,
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            if self.within_budget() { "" } else { ", OVER BUDGET" },
            self.summary
        )
    }

    /// Serialized verdict and reports, without timings.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }
}

pub fn criterion_name(id: u32) -> Option<&'static str> {
    Some(match id {
        1 => "kernel identities",
        2 => "grid limit of mpfbm",
        3 => "SI2/SI1 exactness",
        4 => "self-similarity order table",
        5 => "PSD boundaries",
        6 => "Chentsov calibration",
        7 => "Takenaka scaling",
        8 => "spectral synthesis",
        9 => "Levy-Khintchine and Schoenberg",
        10 => "random measure",
        11 => "sampling fidelity",
        12 => "RKHS and linear extension",
        13 => "characterization round trip",
        14 => "measure increment stationarity",
        15 => "determinism across thread counts",
        _ => return None,
    })
}

fn budget(id: u32) -> Duration {
    Duration::from_secs(match id {
        1 | 4 | 12 | 13 => 1,
        3 | 6 | 10 | 14 => 5,
        5 | 9 => 10,
        2 => 30,
        7 | 8 | 11 => 60,
        _ => 600,
    })
}

struct Partial {
    pass: bool,
    summary: String,
    reports: Vec<Report>,
}

/// Run criterion `id` with run seed `seed`.
pub fn run_criterion(id: u32, seed: u64) -> Result<CriterionOutcome> {
    let name = criterion_name(id).ok_or_else(|| Error::arg(format!("no criterion {id}")))?;
    let start = Instant::now();
    let part = match id {
        1 => kernel_identities(seed)?,
        2 => grid_limit(seed)?,
        3 => si_exactness(seed)?,
        4 => ss_table()?,
        5 => psd_boundaries(seed)?,
        6 => chentsov(seed)?,
        7 => takenaka(seed)?,
        8 => spectral_synthesis(seed)?,
        9 => lk_and_schoenberg(seed)?,
        10 => random_measure(seed)?,
        11 => sampling_fidelity(seed)?,
        12 => rkhs_extension(seed)?,
        13 => characterization(seed)?,
        14 => measure_si(seed)?,
        15 => determinism(seed)?,
        _ => unreachable!(),
    };
    Ok(CriterionOutcome {
        id,
        name: name.to_string(),
        pass: part.pass,
        summary: part.summary,
        reports: part.reports,
        elapsed: start.elapsed(),
        budget: budget(id),
    })
}

/// Every criterion in order.
pub fn run_all(seed: u64) -> Result<Vec<CriterionOutcome>> {
    (1..=15).map(|id| run_criterion(id, seed)).collect()
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn line_space(n: usize) -> Result<Arc<MeasureSpace>> {
    Ok(Arc::new(make_grid_space(1, n, 1.0)?))
}

fn random_funcs(space: &Arc<MeasureSpace>, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Index>> {
    (0..n).map(|_| func(space, uniform_vec(rng, space.len(), -1.0, 1.0))).collect()
}

fn kernel_identities(seed: u64) -> Result<Partial> {
    let mut worst = 0.0f64;
    for d in 1..=3usize {
        let mut rng = unit_rng(seed, 100 + d as u64);
        let half = vec![0.5; d];
        for _ in 0..100 {
            let s = uniform_vec(&mut rng, d, 0.0, 2.0);
            let t = uniform_vec(&mut rng, d, 0.0, 2.0);
            let prod_min: f64 = s.iter().zip(&t).map(|(a, b)| a.min(*b)).product();
            let sheet = cov_sheet(&half, &s, &t)?;
            let mp = cov_mpfbm(0.5, &Rect::new(s.clone())?, &Rect::new(t.clone())?)?;
            worst = worst.max((sheet - prod_min).abs()).max((mp - prod_min).abs());
        }
    }
    let mut r = Report::new("kernel-identities");
    r.judge(worst, 1e-12);
    Ok(Partial {
        pass: r.pass,
        summary: format!("max abs diff {worst:.3e} (tol 1e-12)"),
        reports: vec![r],
    })
}

fn grid_limit(seed: u64) -> Result<Partial> {
    let space = Arc::new(make_grid_space(2, 256, 1.0)?);
    let mut reports = Vec::new();
    let mut worst = 0.0f64;
    for (k, hurst) in [0.25, 0.5].into_iter().enumerate() {
        let l2 = Kernel::l2fbm(Arc::clone(&space), hurst)?;
        let mut rng = unit_rng(seed, 200 + k as u64);
        let mut rel = 0.0f64;
        for _ in 0..100 {
            let s = Rect::new(uniform_vec(&mut rng, 2, 0.25, 1.0))?;
            let t = Rect::new(uniform_vec(&mut rng, 2, 0.25, 1.0))?;
            let exact = cov_mpfbm(hurst, &s, &t)?;
            let fs = Index::Func(indicator_rect(&space, &s)?);
            let ft = Index::Func(indicator_rect(&space, &t)?);
            let approx = l2.cov(&fs, &ft)?;
            rel = rel.max((approx - exact).abs() / exact.abs());
        }
        let mut r = Report::new("grid-limit").with_mode(format!("H={hurst}"));
        r.judge(rel, 0.02);
        worst = worst.max(rel);
        reports.push(r);
    }
    Ok(Partial {
        pass: reports.iter().all(|r| r.pass),
        summary: format!("max relative error {worst:.4} (tol 0.02)"),
        reports,
    })
}

fn si_exactness(seed: u64) -> Result<Partial> {
    let space = line_space(16)?;
    let mut reports = Vec::new();
    let mut worst = 0.0f64;
    for (k, hurst) in [0.1, 0.2, 0.3, 0.4, 0.5].into_iter().enumerate() {
        let kernel = Kernel::l2fbm(Arc::clone(&space), hurst)?;
        let unit = 300 + 10 * k as u64;
        let fs = random_funcs(&space, 16, &mut unit_rng(seed, unit))?;
        let pairs = fs.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect();
        let spec = IncrementSpec::new(pairs)?;
        let like = &fs[0];
        let shift_seed = sub_seed(seed, unit + 1);
        let shifts = (0..20)
            .map(|i| seeded_translation(like, 2.0, shift_seed, i))
            .collect::<Result<Vec<_>>>()?;
        let rot_seed = sub_seed(seed, unit + 2);
        let mut rigid = (0..20)
            .map(|i| seeded_orthogonal(like, rot_seed, i))
            .collect::<Result<Vec<_>>>()?;
        rigid.extend(shifts.iter().cloned());
        for (mode, maps) in [(SiMode::Si2, &shifts), (SiMode::Si1, &rigid)] {
            let mut r = check_si(&kernel, &spec, maps, mode)?;
            r.stat("H", hurst);
            worst = worst.max(r.max_abs_diff.unwrap_or(f64::INFINITY));
            reports.push(r);
        }
    }
    Ok(Partial {
        pass: reports.iter().all(|r| r.pass),
        summary: format!("max Gram deviation {worst:.3e} (tol 1e-10)"),
        reports,
    })
}

fn ss_table() -> Result<Partial> {
    let space = line_space(8)?;
    let mut rng = unit_rng(0, 400);
    let base = random_funcs(&space, 4, &mut rng)?;
    let q = match seeded_orthogonal(&base[0], 0, 401)? {
        crate::stationarity::L2Transform::Orthogonal(q) => q,
        _ => unreachable!(),
    };
    let scales = [0.5, 0.8, 1.5, 2.0, 3.0];
    let points: Vec<Index> = [[0.3, 0.7], [1.0, 0.5], [1.2, 1.9]].iter().map(|p| Index::point(*p)).collect();
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    let mut ok = true;
    for hurst in [0.1, 0.25, 0.4, 0.5] {
        let l2 = Kernel::l2fbm(Arc::clone(&space), hurst)?;
        let mp = Kernel::mpfbm(hurst)?;
        let cases = [
            (fit_ss_order(&l2, &base, &SsFamily::Dilation, &scales)?, 2.0 * hurst),
            (
                fit_ss_order(&l2, &base, &SsFamily::ScaledOrthogonal(Some(q.clone())), &scales)?,
                hurst,
            ),
            (fit_ss_order(&mp, &points, &SsFamily::MpDilation, &scales)?, hurst),
        ];
        for (fit, expected) in cases {
            let err = (fit.order - expected).abs();
            let mut r = fit.report;
            r.stat("H", hurst);
            r.stat("expected_order", expected);
            if err > 1e-10 {
                r.fail(format!("order {} differs from {expected} by {err:e}", fit.order));
            }
            ok &= r.pass;
            lines.push(format!("{}:{:.4}", r.mode.clone().unwrap_or_default(), fit.order));
            reports.push(r);
        }
    }
    Ok(Partial {
        pass: ok,
        summary: format!("orders {}", lines.join(" ")),
        reports,
    })
}

fn psd_boundaries(seed: u64) -> Result<Partial> {
    let space = line_space(16)?;
    let mut worst_rel = f64::INFINITY;
    let mut reports = Vec::new();
    let mut ok = true;
    for s in 0..20u64 {
        let mut rng = unit_rng(seed, 500 + s);
        let n = rng.random_range(8..=64usize);
        let h = rng.random_range(0.05..0.95);
        let h_half = rng.random_range(0.05..=0.5);
        let alpha = rng.random_range(0.1..=2.0);
        let pts = |rng: &mut ChaCha8Rng, d: usize| -> Result<Vec<Index>> {
            Ok((0..n).map(|_| Index::point(uniform_vec(rng, d, 0.01, 2.0))).collect())
        };
        let cases: Vec<(Kernel, Vec<Index>)> = vec![
            (Kernel::fbm1d(h)?, pts(&mut rng, 1)?),
            (Kernel::levy(h)?, pts(&mut rng, 2)?),
            (Kernel::sheet(vec![h, 1.0 - h])?, pts(&mut rng, 2)?),
            (Kernel::mpfbm(h_half)?, pts(&mut rng, 2)?),
            (Kernel::l2fbm(Arc::clone(&space), h_half)?, random_funcs(&space, n, &mut rng)?),
            (Kernel::custom_variogram(alpha)?, pts(&mut rng, 1)?),
        ];
        for (kernel, design) in cases {
            let g = gram(&kernel, &design)?;
            let rel = g.min_eig / g.trace();
            worst_rel = worst_rel.min(rel);
            if !g.is_psd(1e-8) {
                ok = false;
                let mut r = Report::new("psd").with_mode(kernel.label()).with_seed(s);
                r.fail(format!("min_eig {:e} with trace {:e}", g.min_eig, g.trace()));
                reports.push(r);
            }
        }
    }
    let mut summary = Report::new("psd-valid-ranges");
    summary.stat("min_eig_over_trace", worst_rel);
    summary.set_status(if ok { Status::Pass } else { Status::Fail });
    reports.push(summary);

    let design: Vec<Index> = (1..=8).map(|k| Index::point([k as f64 / 8.0])).collect();
    let g = gram(&Kernel::CustomVariogram { alpha: 2.5 }, &design)?;
    let mut r = Report::new("psd-invalid-exponent").with_mode("alpha=2.5");
    r.stat("min_eig", g.min_eig);
    if g.min_eig >= 0.0 {
        r.fail("exponent 2.5 should give an indefinite Gram");
    }
    let neg_ok = r.pass;
    reports.push(r);
    Ok(Partial {
        pass: ok && neg_ok,
        summary: format!(
            "worst min_eig/trace {worst_rel:.3e}; alpha=2.5 min_eig {:.3e}",
            g.min_eig
        ),
        reports,
    })
}

fn chentsov(seed: u64) -> Result<Partial> {
    let cfg = McConfig::new(100_000, sub_seed(seed, 600));
    let (t, s) = ([0.9, -0.4], [-0.3, 0.5]);
    let dist = ((1.2f64).powi(2) + 0.9f64.powi(2)).sqrt();
    let est = chentsov_symdiff_measure(2, &t, &s, &cfg)?;
    let ratio = est.value / dist;
    let mut r2 = Report::new("chentsov").with_mode("d=2").with_seed(cfg.seed);
    r2.stat("ratio", ratio);
    r2.stat("stderr", est.stderr / dist);
    r2.judge((ratio - 1.0).abs(), 0.01);
    let e1 = chentsov_symdiff_measure(1, &[1.7], &[-0.6], &cfg)?;
    let mut r1 = Report::new("chentsov").with_mode("d=1");
    r1.judge((e1.value - 2.3).abs(), 1e-15);
    if e1.stderr != 0.0 {
        r1.fail("d=1 estimate should be exact");
    }
    Ok(Partial {
        pass: r1.pass && r2.pass,
        summary: format!("d=2 ratio {ratio:.5} (1 ± 0.01); d=1 value {}", e1.value),
        reports: vec![r2, r1],
    })
}

fn takenaka(seed: u64) -> Result<Partial> {
    let hurst = 0.25;
    let n = 1_000_000;
    let origin = [0.2, -0.1];
    let dir = [0.6, 0.8];
    let mut pairs = Vec::new();
    for (k, dist) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let t: Vec<f64> = origin.iter().zip(&dir).map(|(o, u)| o + dist * u).collect();
        let est = takenaka_symdiff_measure(2, hurst, &t, &origin, &McConfig::new(n, sub_seed(seed, 700 + k as u64)))?;
        pairs.push((dist, est));
    }
    let fit = exponent_fit(&pairs)?;
    let mut slope = Report::new("takenaka-scaling").with_seed(seed);
    slope.stat("slope", fit.slope);
    slope.stat("r2", fit.r2);
    for (d, e) in &pairs {
        slope.detail(format!("dist={d} value={:.6} stderr={:.6}", e.value, e.stderr));
    }
    slope.judge((fit.slope - 0.5).abs(), 0.03);

    let shift = [3.0, -1.5];
    let t: Vec<f64> = origin.iter().zip(&dir).map(|(o, u)| o + u).collect();
    let t2: Vec<f64> = t.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let s2: Vec<f64> = origin.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let moved = takenaka_symdiff_measure(2, hurst, &t2, &s2, &McConfig::new(n, sub_seed(seed, 710)))?;
    let base = pairs[1].1;
    let se = (base.stderr.powi(2) + moved.stderr.powi(2)).sqrt();
    let z = (moved.value - base.value).abs() / se;
    let mut inv = Report::new("takenaka-translation").with_seed(seed);
    inv.stat("z", z);
    inv.judge(z, 3.0);
    Ok(Partial {
        pass: slope.pass && inv.pass,
        summary: format!("slope {:.4} (0.5 ± 0.03); translation z {z:.2}", fit.slope),
        reports: vec![slope, inv],
    })
}

fn spectral_synthesis(seed: u64) -> Result<Partial> {
    let grid = FreqGridDesc::default().build()?;
    let tgrid: Vec<f64> = (0..16).map(|k| k as f64 / 15.0).collect();
    let mut reports = Vec::new();
    let mut parts = Vec::new();
    for (k, hurst) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let r = spectral_synth_check(hurst, &tgrid, &grid, 4096, sub_seed(seed, 800 + k as u64), 0.02)?;
        parts.push(format!(
            "H={hurst}: cov err {:.4}, inc z {:.2}",
            r.stats["max_cov_err"], r.stats["max_increment_z"]
        ));
        reports.push(r);
    }
    Ok(Partial {
        pass: reports.iter().all(|r| r.pass),
        summary: parts.join("; "),
        reports,
    })
}

fn lk_and_schoenberg(seed: u64) -> Result<Partial> {
    let mut reports = Vec::new();
    let mut worst_ratio = 0.0f64;
    let mut worst_dual = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        let r = lk_scaling_check(alpha, &[0.5, 1.0, 2.0, 5.0], 1e-10)?;
        worst_ratio = worst_ratio.max(r.stats["ratio_rel_err"]);
        worst_dual = worst_dual.max(r.stats["dual_rel_err"]);
        reports.push(r);
    }
    let mut rng = unit_rng(seed, 900);
    let design: Vec<Vec<f64>> = (0..40).map(|_| uniform_vec(&mut rng, 2, 0.0, 2.0)).collect();
    let ts = [0.1, 1.0, 10.0];
    let mut ok = reports.iter().all(|r| r.pass);
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let r = schoenberg_check(&Variogram::power(alpha)?, &design, &ts)?;
        ok &= r.pass;
        reports.push(r);
    }
    let mut bad = schoenberg_check(&Variogram::power(3.0)?, &design, &ts)?;
    let bad_eig = bad.stats["min_eig"];
    let bad_failed = !bad.pass;
    bad.detail("expected to fail: exponent 3 is not conditionally negative definite");
    reports.push(bad);
    Ok(Partial {
        pass: ok && bad_failed,
        summary: format!(
            "scaling err {worst_ratio:.2e}, dual err {worst_dual:.2e}; alpha=3 min_eig {bad_eig:.3e}"
        ),
        reports,
    })
}

fn random_measure(seed: u64) -> Result<Partial> {
    let cells: Vec<Cell> = (0..8)
        .map(|k| Cell {
            lo: k as f64 * 0.5,
            hi: (k + 1) as f64 * 0.5,
            mass: 0.2 + 0.15 * k as f64,
        })
        .collect();
    let r = simulate_random_measure(&cells, 10_000, sub_seed(seed, 1000))?;
    let keys = ["additivity_rel_err", "max_mean_z", "max_second_moment_z", "max_disjoint_corr_z", "overlap_z"];
    let summary = keys
        .iter()
        .filter_map(|k| r.stats.get(*k).map(|v| format!("{k} {v:.3}")))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Partial {
        pass: r.pass,
        summary,
        reports: vec![r],
    })
}

fn sampled_compare<K: Covariance + ?Sized>(kernel: &K, design: &[Index], n_paths: usize, seed: u64) -> Result<Report> {
    let g = gram(kernel, design)?;
    let factor = cholesky_factor(&g)?;
    let paths = sample_paths(&factor, n_paths, seed)?;
    empirical_cov_compare(&paths, &g)
}

fn sampling_fidelity(seed: u64) -> Result<Partial> {
    let space = line_space(16)?;
    let l2 = Kernel::l2fbm(Arc::clone(&space), 0.3)?;
    let funcs = random_funcs(&space, 8, &mut unit_rng(seed, 1100))?;
    let sheet = Kernel::sheet(vec![0.3, 0.7])?;
    let mut prng = unit_rng(seed, 1101);
    let pts: Vec<Index> = (0..8).map(|_| Index::point(uniform_vec(&mut prng, 2, 0.1, 2.0))).collect();
    let mut a = sampled_compare(&l2, &funcs, 4096, sub_seed(seed, 1102))?.with_mode("l2fbm");
    let mut b = sampled_compare(&sheet, &pts, 4096, sub_seed(seed, 1103))?.with_mode("sheet");
    a.check = "sampling-fidelity".into();
    b.check = "sampling-fidelity".into();

    let pair = random_funcs(&space, 2, &mut unit_rng(seed, 1104))?;
    let mut passed = 0;
    for s in 0..100u64 {
        if sampled_compare(&l2, &pair, 4096, s)?.pass {
            passed += 1;
        }
    }
    let mut sc = Report::new("sampling-self-consistency");
    sc.stat("pass_rate", passed as f64 / 100.0);
    sc.set_status(if passed >= 99 { Status::Pass } else { Status::Fail });
    let summary = format!(
        "l2fbm max_z {:.2}, sheet max_z {:.2}, self-consistency {passed}/100",
        a.stats["max_z"], b.stats["max_z"]
    );
    Ok(Partial {
        pass: a.pass && b.pass && sc.pass,
        summary,
        reports: vec![a, b, sc],
    })
}

fn rkhs_extension(seed: u64) -> Result<Partial> {
    let mut rng = unit_rng(seed, 1200);
    let design: Vec<Index> = (1..=8).map(|k| Index::point([k as f64 * 0.25])).collect();
    let model = RkhsModel::new(&Kernel::fbm1d(0.35)?, design)?;
    let mut reports = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let coeffs = uniform_vec(&mut rng, 8, -2.0, 2.0);
        let r = rkhs_check(&model, &coeffs)?;
        worst = worst.max(r.max_abs_diff.unwrap_or(f64::INFINITY));
        reports.push(r);
    }
    let elements: Vec<Vec<f64>> = (0..6)
        .map(|_| {
            let beta = nalgebra::DVector::from_vec(uniform_vec(&mut rng, 8, -1.0, 1.0));
            (&model.gram_c * beta).iter().copied().collect()
        })
        .collect();
    let process = LinearProcess::new(&model, &elements)?;
    let si = linear_process_si2_check(&process, &[(0, 1), (2, 3), (1, 3)], &[4, 5])?;
    let si_diff = si.max_abs_diff.unwrap_or(f64::INFINITY);
    reports.push(si);
    Ok(Partial {
        pass: reports.iter().all(|r| r.pass),
        summary: format!("reproducing residual {worst:.2e}; extension SI2 deviation {si_diff:e}"),
        reports,
    })
}

fn characterization(seed: u64) -> Result<Partial> {
    let space = line_space(8)?;
    let mut rng = unit_rng(seed, 1300);
    let funcs: Vec<Index> = random_funcs(&space, 6, &mut rng)?
        .into_iter()
        .enumerate()
        .map(|(k, f)| f.scale(0.4 + 0.3 * k as f64))
        .collect();
    let pairs: Vec<(Index, Index)> = (0..funcs.len())
        .flat_map(|i| (i..funcs.len()).map(move |j| (i, j)))
        .map(|(i, j)| (funcs[i].clone(), funcs[j].clone()))
        .collect();
    let mut reports = Vec::new();
    let mut ok = true;
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let hurst = 0.05 * k as f64;
        let kernel = Kernel::l2fbm(Arc::clone(&space), hurst)?;
        let phi: Vec<(Index, f64)> = funcs
            .iter()
            .map(|f| Ok((f.clone(), kernel.cov(f, f)?)))
            .collect::<Result<_>>()?;
        let cov: Vec<((Index, Index), f64)> = pairs
            .iter()
            .map(|(a, b)| Ok(((a.clone(), b.clone()), kernel.cov(a, b)?)))
            .collect::<Result<_>>()?;
        let mode = if k % 2 == 0 { CharacterizeMode::P32 } else { CharacterizeMode::P31 };
        let c = characterize_fractional(&phi, &cov, mode)?;
        let err = (c.kernel_h - hurst).abs();
        worst = worst.max(err);
        let mut r = c.report;
        r.stat("target_H", hurst);
        if c.verdict != Verdict::Accept || err > 1e-10 {
            r.fail(format!("round trip gave H={} ({:?})", c.kernel_h, c.verdict));
        }
        ok &= r.pass;
        reports.push(r);
    }

    let not_power = |f: &Index| f.norm_sq() + f.norm();
    let phi: Vec<(Index, f64)> = funcs.iter().map(|f| (f.clone(), not_power(f))).collect();
    let cov: Vec<((Index, Index), f64)> = pairs
        .iter()
        .map(|(a, b)| {
            let d = a.try_sub(b)?;
            Ok(((a.clone(), b.clone()), 0.5 * (not_power(a) + not_power(b) - not_power(&d))))
        })
        .collect::<Result<_>>()?;
    let rej1 = characterize_fractional(&phi, &cov, CharacterizeMode::P31)?;

    let kernel = Kernel::l2fbm(Arc::clone(&space), 0.3)?;
    let phi: Vec<(Index, f64)> = funcs
        .iter()
        .map(|f| Ok((f.clone(), kernel.cov(f, f)?)))
        .collect::<Result<_>>()?;
    let mut cov: Vec<((Index, Index), f64)> = pairs
        .iter()
        .map(|(a, b)| Ok(((a.clone(), b.clone()), kernel.cov(a, b)?)))
        .collect::<Result<_>>()?;
    cov[3].1 += 0.01;
    let rej2 = characterize_fractional(&phi, &cov, CharacterizeMode::P32)?;
    let rejects = rej1.verdict == Verdict::Reject && rej2.verdict == Verdict::Reject;
    for (label, c) in [("non-power variogram", rej1), ("perturbed covariance", rej2)] {
        let mut r = c.report;
        r.check = "characterize-counterexample".into();
        r.mode = Some(label.into());
        let rejected = c.verdict == Verdict::Reject;
        r.set_status(if rejected { Status::Pass } else { Status::Fail });
        reports.push(r);
    }
    Ok(Partial {
        pass: ok && rejects,
        summary: format!(
            "max |H error| {worst:.2e}; counterexamples {}",
            if rejects { "rejected" } else { "NOT rejected" }
        ),
        reports,
    })
}

fn measure_si(seed: u64) -> Result<Partial> {
    let mut rng = unit_rng(seed, 1400);
    let mut worst_one = 0.0f64;
    let mut ok = true;
    let mut reports = Vec::new();
    for k in 0..100 {
        let hurst = [0.1, 0.2, 0.3, 0.4, 0.5][k % 5];
        let t = uniform_vec(&mut rng, 2, 0.0, 1.0);
        let tp: Vec<f64> = t.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
        let diff = tp.iter().product::<f64>() - t.iter().product::<f64>();
        let side = diff.sqrt();
        let r = measure_si_one_point(hurst, &t, &tp, &[side, side])?;
        let gap = (r.stats["increment_variance"] - diff.powf(2.0 * hurst)).abs();
        worst_one = worst_one.max(gap).max(r.max_abs_diff.unwrap_or(f64::INFINITY));
        if r.status != Status::Pass {
            ok = false;
            reports.push(r);
        }
    }
    let mut one = Report::new("measure-increment-stationarity").with_mode("one-point");
    one.judge(worst_one, 1e-12);
    ok &= one.pass;
    reports.push(one);

    let mut worst_n = 0.0f64;
    for _ in 0..20 {
        let hurst = rng.random_range(0.05..=0.5);
        let (a, b) = (rng.random_range(0.1..1.0), rng.random_range(0.1..1.0));
        let c = rng.random_range(0.2..2.0);
        let xs = uniform_vec(&mut rng, 5, 0.0, 1.0);
        let t_list: Vec<Vec<f64>> = xs.iter().map(|x| vec![a + x, b]).collect();
        let tau_list: Vec<Vec<f64>> = xs.iter().map(|x| vec![x * b / c, c]).collect();
        let r = measure_si_check(hurst, &[a, b], &t_list, &tau_list)?;
        worst_n = worst_n.max(r.max_abs_diff.unwrap_or(f64::INFINITY));
        if r.status != Status::Pass {
            ok = false;
            reports.push(r);
        }
    }
    let mut n_point = Report::new("measure-increment-stationarity").with_mode("n-point");
    n_point.judge(worst_n, 1e-10);
    ok &= n_point.pass;
    reports.push(n_point);
    Ok(Partial {
        pass: ok,
        summary: format!("one-point max gap {worst_one:.2e} (1e-12); n-point max diff {worst_n:.2e} (1e-10)"),
        reports,
    })
}

fn determinism(seed: u64) -> Result<Partial> {
    let mut reports = Vec::new();
    let mut ok = true;
    let mut mismatched = Vec::new();
    for id in STOCHASTIC {
        let runs = [1usize, 4, 8]
            .into_iter()
            .map(|threads| with_threads(threads, || run_criterion(id, seed))?)
            .collect::<Result<Vec<_>>>()?;
        let same = runs.windows(2).all(|w| w[0].fingerprint() == w[1].fingerprint());
        let mut r = Report::new("determinism").with_mode(format!("criterion {id}")).with_seed(seed);
        r.stat("fingerprint_bytes", runs[0].fingerprint().len() as f64);
        if !same {
            r.fail("outputs differ across 1, 4 and 8 workers");
            mismatched.push(id);
        }
        ok &= same;
        reports.push(r);
    }
    Ok(Partial {
        pass: ok,
        summary: if ok {
            format!("criteria {STOCHASTIC:?} identical under 1, 4, 8 workers")
        } else {
            format!("criteria {mismatched:?} differ across worker counts")
        },
        reports,
    })
}
