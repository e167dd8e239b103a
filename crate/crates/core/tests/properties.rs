use std::sync::Arc;

use l2field::characterize::{characterize_fractional, CharacterizeMode, Verdict};
use l2field::measure_space::{l2_dot, make_grid_space, L2Vec, MeasureSpace};
use l2field::sampler::{cholesky_factor, sample_paths};
use l2field::seeding::with_threads;
use l2field::stationarity::{check_si, func, IncrementSpec, L2Transform, SiMode};
use l2field::{gram, Gram, Index, Kernel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn space() -> Arc<MeasureSpace> {
    Arc::new(make_grid_space(1, 5, 1.0).unwrap())
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 5)
}

fn hurst() -> impl Strategy<Value = f64> {
    0.05f64..0.95
}

/// Range accepted by the set-indexed and L2-indexed families.
fn hurst_half() -> impl Strategy<Value = f64> {
    0.02f64..=0.5
}

fn distinct_points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), n).prop_filter("distinct points", |pts| {
        pts.iter().enumerate().all(|(i, a)| {
            pts[..i]
                .iter()
                .all(|b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() > 1e-3)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grams_are_symmetric_and_psd(h in hurst(), pts in distinct_points(2..12), fam in 0usize..3) {
        let kernel = match fam {
            0 => Kernel::levy(h).unwrap(),
            1 => Kernel::sheet(vec![h, 1.0 - h]).unwrap(),
            _ => Kernel::mpfbm(h.min(0.5)).unwrap(),
        };
        let design: Vec<Index> = pts.iter().map(|p| Index::point(p.iter().map(|x| x.abs() + 0.01).collect::<Vec<_>>())).collect();
        let g = gram(&kernel, &design).unwrap();
        prop_assert_eq!(&g.matrix, &g.matrix.transpose());
        prop_assert!(g.is_psd(1e-10), "min_eig {}", g.min_eig);
    }

    #[test]
    fn l2fbm_grams_are_psd(h in hurst_half(), fs in prop::collection::vec(coeffs(), 2..8)) {
        let sp = space();
        let design: Vec<Index> = fs.into_iter().map(|c| func(&sp, c).unwrap()).collect();
        let g = gram(&Kernel::l2fbm(Arc::clone(&sp), h).unwrap(), &design).unwrap();
        prop_assert!(g.is_psd(1e-10), "min_eig {}", g.min_eig);
    }

    #[test]
    fn l2_dot_is_bilinear(a in coeffs(), b in coeffs(), c in coeffs(), s in -5.0f64..5.0, t in -5.0f64..5.0) {
        let sp = space();
        let (f, g, k) = (L2Vec::new(&sp, a).unwrap(), L2Vec::new(&sp, b).unwrap(), L2Vec::new(&sp, c).unwrap());
        let combo = f.scale(s).try_add(&g.scale(t)).unwrap();
        let lhs = l2_dot(&sp, &combo, &k).unwrap();
        let rhs = s * l2_dot(&sp, &f, &k).unwrap() + t * l2_dot(&sp, &g, &k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        prop_assert!((l2_dot(&sp, &f, &g).unwrap() - l2_dot(&sp, &g, &f).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn l2fbm_increments_shift_invariant(h in hurst_half(), fs in prop::collection::vec(coeffs(), 4), shifts in prop::collection::vec(coeffs(), 1..4)) {
        let sp = space();
        let idx: Vec<Index> = fs.into_iter().map(|c| func(&sp, c).unwrap()).collect();
        let spec = IncrementSpec::new(vec![(idx[0].clone(), idx[1].clone()), (idx[2].clone(), idx[3].clone())]).unwrap();
        let ts: Vec<L2Transform> = shifts.into_iter().map(|c| L2Transform::Translation(func(&sp, c).unwrap())).collect();
        let r = check_si(&Kernel::l2fbm(Arc::clone(&sp), h).unwrap(), &spec, &ts, SiMode::Si2).unwrap();
        prop_assert!(r.pass);
        prop_assert!(r.max_abs_diff.unwrap() <= 1e-10);
    }

    #[test]
    fn rho_is_multiplicative(a in 0.2f64..3.0, b in 0.2f64..3.0, c in coeffs()) {
        let sp = space();
        let f = func(&sp, c).unwrap();
        let (phi, psi) = (L2Transform::dilation(a, 5), L2Transform::dilation(b, 5));
        let composite = phi.clone().then(psi.clone());
        prop_assert!((composite.rho() - phi.rho() * psi.rho()).abs() <= 1e-12 * composite.rho());
        let image = composite.apply(&f).unwrap();
        let expected = phi.rho() * psi.rho() * f.norm_sq();
        prop_assert!((image.norm_sq() - expected).abs() <= 1e-12 * (1.0 + expected));
    }

    #[test]
    fn sampling_is_linear_in_the_factor(h in hurst(), c in 0.1f64..10.0, seed in any::<u64>()) {
        let design: Vec<Index> = [0.3, 0.6, 1.1, 1.7].iter().map(|x| Index::point([*x])).collect();
        let f = cholesky_factor(&gram(&Kernel::fbm1d(h).unwrap(), &design).unwrap()).unwrap();
        let base = sample_paths(&f, 16, seed).unwrap().values;
        let scaled = sample_paths(&f.scaled(c), 16, seed).unwrap().values;
        let diff = (&scaled - &base * c).amax();
        prop_assert!(diff <= 1e-12 * c * (1.0 + base.amax()), "{diff}");
    }

    #[test]
    fn accepted_characterizations_are_psd(beta in 0.1f64..3.0, sigma2 in 0.1f64..5.0, pts in distinct_points(5..10)) {
        let phi = |p: &[f64]| sigma2 * p.iter().map(|x| x * x).sum::<f64>().sqrt().powf(beta);
        let design: Vec<Index> = pts.iter().map(|p| Index::point(p.clone())).collect();
        prop_assume!(pts.iter().all(|p| p.iter().map(|x| x.abs()).sum::<f64>() > 1e-3));
        let norms: Vec<f64> = design.iter().map(Index::norm).collect();
        prop_assume!(norms.iter().enumerate().all(|(i, a)| norms[..i].iter().all(|b| (a - b).abs() > 1e-6)));
        let phi_samples: Vec<(Index, f64)> = pts.iter().zip(&design).map(|(p, i)| (i.clone(), phi(p))).collect();
        let n = pts.len();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let d: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
            0.5 * (phi(&pts[i]) + phi(&pts[j]) - phi(&d))
        });
        let cov_samples: Vec<((Index, Index), f64)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| ((design[i].clone(), design[j].clone()), cov[(i, j)]))
            .collect();
        let c = characterize_fractional(&phi_samples, &cov_samples, CharacterizeMode::P31).unwrap();
        prop_assert_eq!(c.verdict, Verdict::Accept);
        prop_assert!((c.kernel_h - beta / 4.0).abs() < 1e-6);
        if c.kernel_h <= 0.5 {
            let g = Gram::from_matrix(cov).unwrap();
            prop_assert!(g.min_eig >= -1e-8 * g.trace(), "β={beta} min_eig {}", g.min_eig);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampling_ignores_worker_count(h in hurst(), seed in any::<u64>(), threads in 2usize..9) {
        let design: Vec<Index> = (1..=6).map(|k| Index::point([k as f64 * 0.2])).collect();
        let f = cholesky_factor(&gram(&Kernel::fbm1d(h).unwrap(), &design).unwrap()).unwrap();
        let one = with_threads(1, || sample_paths(&f, 500, seed).unwrap()).unwrap();
        let many = with_threads(threads, || sample_paths(&f, 500, seed).unwrap()).unwrap();
        prop_assert_eq!(one.values, many.values);
    }
}
