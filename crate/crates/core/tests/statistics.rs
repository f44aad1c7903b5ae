//! Statistical invariants of the ensembles and spectra.

use qspin::ensembles::{cosine_surrogate_series, mean_and_se, sample_sphere, series_ratio, sphere_moment, Law};
use qspin::hamiltonian::{build, CouplingGeometry};
use qspin::harness::linear_fit;
use qspin::rng::derive;
use qspin::spectra::eig_dense;

#[test]
fn sphere_second_moments_sum_to_one() {
    for n in [2usize, 9, 90, 900, 9000] {
        let e = sphere_moment(n, &[2]).unwrap();
        let total: f64 = (0..n).map(|_| e).sum();
        assert!((total - 1.0).abs() <= n as f64 * f64::EPSILON, "N={n}: {total}");
    }
}

#[test]
fn series_terms_between_bounds() {
    for n in [100usize, 1000, 10_000] {
        for k in 0..=n / 2 {
            let r = series_ratio(n, k);
            let (k, nf) = (k as f64, n as f64);
            // ln(1−u) ≥ −u − u² for u ≤ 1/2 gives C = 1/3
            let lower = (-3.0 * k * (k - 1.0) / (2.0 * nf) - k.powi(3) / (3.0 * nf * nf)).exp();
            assert!(r <= 1.0 && r >= lower * (1.0 - 1e-12), "N={n} k={k}: {r} vs {lower}");
        }
    }
}

#[test]
fn series_converges_monotonically() {
    for t in [0.5f64, 1.0, 2.0] {
        let target = (-0.5 * t * t).exp();
        let errs: Vec<f64> = [100usize, 1000, 10_000]
            .iter()
            .map(|&n| (cosine_surrogate_series(n, t).unwrap().value - target).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "t={t}: {errs:?}");
    }
}

/// Tail of the 1-Lipschitz coordinate `x_1`: `ln P[|x_1| > t] ≈ ln C − c N t²`
/// with `c` comparable across dimensions.
#[test]
fn spherical_concentration() {
    let mut slopes = Vec::new();
    for n in [90usize, 900] {
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|r| sample_sphere(n, derive(21, &[n as u64, r as u64])).unwrap().values[0].abs())
            .collect();
        let (mut u, mut v) = (Vec::new(), Vec::new());
        for s in [1.0f64, 2.0, 4.0, 8.0] {
            let t = (s / n as f64).sqrt();
            let p = xs.iter().filter(|&&x| x > t).count() as f64 / draws as f64;
            u.push(s);
            v.push(p.ln());
        }
        let (_, b, _) = linear_fit(&u, &v).unwrap();
        slopes.push(-b);
    }
    assert!(slopes.iter().all(|&c| c > 0.0));
    let ratio = slopes[0] / slopes[1];
    assert!((0.5..=2.0).contains(&ratio), "{slopes:?}");
}

#[test]
fn reflection_symmetry_of_third_moment() {
    let g = CouplingGeometry::chain(6).unwrap();
    let m3: Vec<f64> = (0..500u64)
        .map(|r| {
            let x = Law::GaussianIid.sample(54, derive(22, &[r])).unwrap();
            eig_dense(&build(&g, &x).unwrap()).unwrap().moment(3)
        })
        .collect();
    let est = mean_and_se(&m3);
    assert!(est.mean.abs() <= 3.0 * est.std_error, "{est:?}");
}
