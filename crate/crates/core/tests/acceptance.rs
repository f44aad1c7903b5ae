//! Acceptance suite. Prints one line per criterion and exits nonzero on any
//! failure that is not a known defect of the criterion itself. Known failures
//! still print FAIL; only the exit status ignores them.
//!
//! `ACCEPTANCE_ONLY=3,7` runs a subset.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qspin::dense::ComplexMatrix;
use qspin::ensembles::{cosine_product_mc, cosine_surrogate_series, mean_and_se, sample_sphere, sphere_moment, Law};
use qspin::hamiltonian::{build, CouplingGeometry};
use qspin::harness::{
    run_cf_check, run_concentration, run_distance_sweep, run_lipschitz_check, run_moments, ExperimentConfig, Metric,
};
use qspin::measures::{
    dbl_discrete, dbl_discrete_lp, dbl_to_law, fejer_convolve, random_bl1, w1_discrete, w1_to_law, DblOptions,
    DiscreteMeasure, ReferenceLaw,
};
use qspin::pauli::PauliString;
use qspin::rng::{derive, generator};
use qspin::spectra::{eig_dense, eig_dense_checked, lanczos_extremal, moment_exact, stochastic_moments};
use qspin::special::normal_sf;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Every failure traces back to a documented defect of the criterion.
    known_defect: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            known_defect: false,
        }
    }
}

fn within(start: Instant, limit: Duration) -> bool {
    start.elapsed() < limit
}

fn chain_pair(n: usize, j: usize, a: u8, b: u8) -> PauliString {
    PauliString::product_of(n, &[(j, a), (j % n + 1, b)]).unwrap()
}

fn c1_trace_identities() -> Outcome {
    let start = Instant::now();
    let (mut wrong, mut mismatched, mut checked) = (Vec::new(), 0usize, 0usize);
    for n in 2..=6usize {
        let mut dense: HashMap<(usize, u8, u8), ComplexMatrix> = HashMap::new();
        for j in 1..=n {
            for a in 1..=3 {
                for b in 1..=3 {
                    dense.insert((j, a, b), chain_pair(n, j, a, b).to_dense().unwrap());
                }
            }
        }
        for j in 1..=n {
            for k in 1..=n {
                for a in 1..=3u8 {
                    for b in 1..=3u8 {
                        for c in 1..=3u8 {
                            for d in 1..=3u8 {
                                let s = chain_pair(n, j, a, b).multiply(&chain_pair(n, k, c, d)).unwrap();
                                let sym = s.trace();
                                let num = dense[&(j, a, b)].matmul(&dense[&(k, c, d)]).unwrap().trace();
                                if num.re != sym.re as f64 || num.im != sym.im as f64 {
                                    mismatched += 1;
                                }
                                let expect = if j == k && a == c && b == d { 1i128 << n } else { 0 };
                                if sym.re != expect || sym.im != 0 {
                                    wrong.push(n);
                                }
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let fast = within(start, Duration::from_secs(10));
    let at_two = wrong.iter().filter(|&&n| n == 2).count();
    Outcome {
        pass: wrong.is_empty() && mismatched == 0 && fast,
        detail: format!(
            "{checked} traces, symbolic≠dense {mismatched}, identity violations {} (all at n=2: {})",
            wrong.len(),
            at_two == wrong.len()
        ),
        known_defect: mismatched == 0 && fast && at_two == wrong.len(),
    }
}

fn c2_hs_identity() -> Outcome {
    let start = Instant::now();
    let mut failures: Vec<usize> = Vec::new();
    let mut worst_ok = 0.0f64;
    for n in 2..=6usize {
        let g = CouplingGeometry::chain(n).unwrap();
        for i in 0..100u64 {
            let x = Law::GaussianIid.sample(9 * n, derive(2, &[n as u64, i, 0])).unwrap();
            let y = Law::GaussianIid.sample(9 * n, derive(2, &[n as u64, i, 1])).unwrap();
            let dist = build(&g, &x).unwrap().hs_distance_dense(&build(&g, &y).unwrap()).unwrap();
            let diff = x.values.iter().zip(&y.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let expect = 2f64.powf(n as f64 / 2.0) / (3.0 * (n as f64).sqrt()) * diff;
            let rel = (dist - expect).abs() / expect;
            if rel > 1e-10 {
                failures.push(n);
            } else {
                worst_ok = worst_ok.max(rel);
            }
        }
    }
    let fast = within(start, Duration::from_secs(30));
    let at_two = failures.iter().all(|&n| n == 2);
    Outcome {
        pass: failures.is_empty() && fast,
        detail: format!(
            "{} of 500 pairs off by >1e-10 (all at n=2: {at_two}); worst passing rel error {worst_ok:.1e}",
            failures.len()
        ),
        known_defect: fast && at_two,
    }
}

fn c3_sum_rules() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    let mut cases: Vec<CouplingGeometry> = (2..=12).map(|n| CouplingGeometry::chain(n).unwrap()).collect();
    cases.push(CouplingGeometry::complete(5).unwrap());
    cases.push(CouplingGeometry::pspin(6, 3).unwrap());
    cases.push(CouplingGeometry::pspin(5, 4).unwrap());
    for (i, g) in cases.iter().enumerate() {
        let x = Law::GaussianIid.sample(g.coefficient_dim(), derive(3, &[i as u64])).unwrap();
        let h = build(g, &x).unwrap();
        let (spec, check) = eig_dense_checked(&h, 4).unwrap();
        let l = spec.eigenvalues();
        let norm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s1 = l.iter().sum::<f64>().abs() / norm;
        let hs = h.hs_norm_sq();
        let s2 = (l.iter().map(|v| v * v).sum::<f64>() - hs).abs() / hs;
        let res = check.max_residual / check.op_norm;
        ok &= s1 <= 1e-9 && s2 <= 1e-9 && res <= 1e-8;
        worst = (worst.0.max(s1), worst.1.max(s2), worst.2.max(res));
    }
    Outcome::new(
        ok,
        format!(
            "{} spectra (chain n=2..12, complete, pspin): |Σλ|/‖λ‖ ≤ {:.1e}, Σλ² rel {:.1e}, residual/‖H‖ {:.1e}",
            cases.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn c4_hoffman_wielandt() -> Outcome {
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for n in [4usize, 6] {
        let g = CouplingGeometry::chain(n).unwrap();
        for i in 0..100u64 {
            let x = Law::GaussianIid.sample(9 * n, derive(4, &[n as u64, i, 0])).unwrap();
            let y = Law::GaussianIid.sample(9 * n, derive(4, &[n as u64, i, 1])).unwrap();
            let (h, k) = (build(&g, &x).unwrap(), build(&g, &y).unwrap());
            let (a, b) = (eig_dense(&h).unwrap(), eig_dense(&k).unwrap());
            let lhs: f64 = a.eigenvalues().iter().zip(b.eigenvalues()).map(|(p, q)| (p - q).powi(2)).sum();
            let rhs = h.hs_distance_dense(&k).unwrap().powi(2);
            if lhs > rhs + 1e-9 {
                violations += 1;
            }
            tightest = tightest.max(lhs / rhs);
        }
    }
    Outcome::new(violations == 0, format!("{violations} violations in 200 pairs; max ratio {tightest:.4}"))
}

fn c5_moments() -> Outcome {
    let start = Instant::now();
    let mut exact_ok = true;
    let mut geoms: Vec<CouplingGeometry> = (3..=8).map(|n| CouplingGeometry::chain(n).unwrap()).collect();
    geoms.push(CouplingGeometry::complete(4).unwrap());
    geoms.push(CouplingGeometry::ring(5).unwrap());
    geoms.push(CouplingGeometry::graph(5, vec![(1, 2), (1, 3), (1, 4), (1, 5)]).unwrap());
    for g in &geoms {
        exact_ok &= moment_exact(g, 2, &Law::GaussianIid).unwrap() == 1.into();
    }
    let cfg = ExperimentConfig {
        n_list: vec![4, 6],
        replicas: 500,
        master_seed: 5,
        ..ExperimentConfig::default()
    };
    let rep = run_moments(&cfg, 4).unwrap();
    let fit = &rep.fits[0];
    let z4 = [fit.detail["z[n=4,k=4]"], fit.detail["z[n=6,k=4]"]];
    let mc_ok = z4.iter().all(|z| z.abs() <= 3.0);

    let g = CouplingGeometry::chain(12).unwrap();
    let h = build(&g, &Law::GaussianIid.sample(108, derive(5, &[12])).unwrap()).unwrap();
    let spec = eig_dense(&h).unwrap();
    let est = stochastic_moments(&h, 4, 64, derive(5, &[12, 1])).unwrap();
    let zs: Vec<f64> = est
        .iter()
        .enumerate()
        .map(|(i, e)| (e.mean - spec.moment(i as u32 + 1)) / e.std_error)
        .collect();
    let hutch_ok = zs.iter().all(|z| z.abs() <= 3.0);
    let fast = within(start, Duration::from_secs(300));
    Outcome::new(
        exact_ok && mc_ok && hutch_ok && fast,
        format!(
            "m2=1 exactly on {} geometries: {exact_ok}; m4 z-scores {:.2}, {:.2}; Hutchinson z (k=1..4) {}",
            geoms.len(),
            z4[0],
            z4[1],
            zs.iter().map(|z| format!("{z:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn random_measure(rng: &mut impl Rng) -> DiscreteMeasure {
    let k = rng.gen_range(1..=8);
    let pts = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let ws = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::new(pts, ws).unwrap()
}

fn c6_metric_engine() -> Outcome {
    // ∫|1{x≥0} − Φ(x)| dx = 2∫₀^∞ (1 − Φ), composite Simpson on [0, 12]
    let steps = 200_000;
    let h = 12.0 / steps as f64;
    let mut s = normal_sf(0.0) + normal_sf(12.0);
    for i in 1..steps {
        s += normal_sf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let quad = 2.0 * s * h / 3.0;
    let w1 = w1_to_law(&DiscreteMeasure::dirac(0.0), &ReferenceLaw::StandardGaussian);
    let target = (2.0 / PI).sqrt();
    let w1_ok = (w1 - target).abs() <= 1e-6 && (quad - target).abs() <= 1e-6;

    let (d0, d2) = (DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(2.0));
    let flow = dbl_discrete(&d0, &d2).unwrap().value;
    let lp = dbl_discrete_lp(&d0, &d2).unwrap();
    let dirac_ok = (flow - 1.0).abs() <= 1e-4 && (lp - 1.0).abs() <= 1e-4;

    let mut rng = generator(6);
    let (mut below_w1, mut sym, mut tri, mut ident) = (true, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (mu, nu, rho) = (random_measure(&mut rng), random_measure(&mut rng), random_measure(&mut rng));
        let d_mn = dbl_discrete(&mu, &nu).unwrap().value;
        let d_nm = dbl_discrete(&nu, &mu).unwrap().value;
        let d_nr = dbl_discrete(&nu, &rho).unwrap().value;
        let d_mr = dbl_discrete(&mu, &rho).unwrap().value;
        below_w1 &= d_mn <= w1_discrete(&mu, &nu) + 1e-9 && d_mn >= 0.0;
        sym = sym.max((d_mn - d_nm).abs());
        tri = tri.max(d_mr - d_mn - d_nr);
        ident = ident.max(dbl_discrete(&mu, &mu).unwrap().value);
    }
    let opts = DblOptions::default();
    for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
        for _ in 0..10 {
            let mu = random_measure(&mut rng);
            let d = dbl_to_law(&mu, &law, &opts).unwrap();
            below_w1 &= d.value - d.slack <= w1_to_law(&mu, &law);
        }
    }
    let axioms_ok = sym <= 1e-9 && tri <= 1e-7 && ident == 0.0;
    Outcome::new(
        w1_ok && dirac_ok && below_w1 && axioms_ok,
        format!(
            "W1(δ0,γ) err {:.1e} (quadrature {:.1e}); d_BL(δ0,δ2) flow {flow:.6} LP {lp:.6}; d_BL≤W1 {below_w1}; asym {sym:.1e}, triangle excess {tri:.1e}, d(μ,μ) {ident}",
            (w1 - target).abs(),
            (quad - target).abs()
        ),
    )
}

fn c7_fejer_bound() -> Outcome {
    let start = Instant::now();
    let r = 4.0;
    let grid: Vec<f64> = (0..10_000).map(|i| -2.0 * r + 4.0 * r * i as f64 / 9_999.0).collect();
    let mut rng = generator(7);
    let mut violations = 0;
    let mut worst: Vec<(f64, f64)> = Vec::new();
    for lambda in [1e2f64, 1e3] {
        let bound = (8.0 * lambda.ln() + 8.0 * (2.0 * r).ln() + 6.0) / (PI * lambda);
        let mut worst_err = 0.0f64;
        for _ in 0..100 {
            let m = rng.gen_range(2..=32);
            let f = random_bl1(&mut rng, -r, r, m);
            let conv = fejer_convolve(&f, lambda, &grid).unwrap();
            let err = grid.iter().zip(&conv).fold(0.0f64, |e, (&x, &c)| e.max((f.eval(x) - c).abs()));
            if err > bound {
                violations += 1;
            }
            worst_err = worst_err.max(err);
        }
        worst.push((worst_err, bound));
    }
    let fast = within(start, Duration::from_secs(120));
    Outcome::new(
        violations == 0 && fast,
        format!(
            "{violations} violations; λ=100 max err {:.4} vs bound {:.4}; λ=1000 max err {:.5} vs bound {:.5}",
            worst[0].0, worst[0].1, worst[1].0, worst[1].1
        ),
    )
}

fn c8_cf_bound() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        n_list: vec![6, 8, 10],
        replicas: 100,
        t_grid: vec![0.5, 1.0, 2.0, 4.0],
        master_seed: 8,
        ..ExperimentConfig::default()
    };
    let rep = run_cf_check(&cfg).unwrap();
    let fit = &rep.fits[0];
    let sups: Vec<f64> = cfg.n_list.iter().map(|n| fit.detail[&format!("sup[n={n}]")]).collect();
    let ratio = fit.detail["stability_ratio"];
    let fast = within(start, Duration::from_secs(600));
    Outcome::new(
        fit.passed == Some(true) && sups.iter().all(|s| s.is_finite()) && fast,
        format!("sup statistic at n=6,8,10: {:.4}, {:.4}, {:.4}; max/min {ratio:.3}", sups[0], sups[1], sups[2]),
    )
}

fn c9_gaussian_trend() -> Outcome {
    let cfg = ExperimentConfig {
        n_list: vec![4, 6, 8, 10],
        replicas: 50,
        metrics: vec![Metric::DblGauss],
        master_seed: 9,
        ..ExperimentConfig::default()
    };
    let rep = run_distance_sweep(&cfg).unwrap();
    let fit = &rep.fits[0];
    let means: Vec<String> = cfg
        .n_list
        .iter()
        .map(|n| format!("{:.4}", fit.detail[&format!("mean[n={n}]")]))
        .collect();
    Outcome::new(
        fit.passed == Some(true),
        format!(
            "means {}; endpoint gap {:.4} vs pooled SE {:.4}",
            means.join(" > "),
            fit.detail["endpoint_gap"],
            fit.detail["pooled_se"]
        ),
    )
}

fn c10_concentration() -> Outcome {
    let cfg = ExperimentConfig {
        n_list: vec![6, 10],
        replicas: 500,
        metrics: vec![Metric::DblGauss],
        master_seed: 10,
        ..ExperimentConfig::default()
    };
    let rep = run_concentration(&cfg, &[0.0, 0.005, 0.01, 0.02, 0.04]).unwrap();
    let fit = rep.fits.iter().find(|f| f.experiment.starts_with("concentration")).unwrap();
    let ratio = fit.detail["std_ratio_first_last"];
    let slope = fit.detail.get("slope").copied().unwrap_or(f64::NAN);
    // Diagnostic: how much of d_BL at n=10 is the overall scale m2 = ‖x‖²/9n.
    let geometry = cfg.geometry(10).unwrap();
    let (mut d, mut scale) = (Vec::new(), Vec::new());
    for row in rep.rows.iter().filter(|r| r.n == 10 && r.metric == "dbl_gauss" && r.error.is_none()) {
        let x = cfg.coefficients(&geometry, cfg.replica_seed(10, row.replica)).unwrap().values;
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        d.push(row.value);
        scale.push(m2.ln().abs());
    }
    let corr = correlation(&d, &scale);
    let pass = (1.1..=2.5).contains(&ratio) && slope < 0.0;
    Outcome {
        pass,
        detail: format!(
            "std n=6 {:.5}, n=10 {:.5}, ratio {ratio:.3} (√(10/6) = 1.291); exceedance slope {slope:.3}; {} censored; \
             corr(d_BL, |ln m2|) at n=10 {corr:.3}",
            fit.detail["std[n=6]"],
            fit.detail["std[n=10]"],
            fit.notes.iter().filter(|s| s.starts_with("censored")).count()
        ),
        known_defect: false,
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / k, b.iter().sum::<f64>() / k);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn c11_lipschitz() -> Outcome {
    let cfg = ExperimentConfig {
        n_list: vec![4, 6],
        master_seed: 11,
        grid_step: 0.01,
        ..ExperimentConfig::default()
    };
    let rep = run_lipschitz_check(&cfg, 1000, 1).unwrap();
    let d = &rep.fits[0].detail;
    Outcome::new(
        d["violations_a"] == 0.0,
        format!(
            "{} violations in 2000 triples, max ratio {:.4}; d_BL part: {} violations, max ratio {:.4}",
            d["violations_a"], d["max_ratio_a"], d["violations_b"], d["max_ratio_b"]
        ),
    )
}

fn c12_spherical() -> Outcome {
    let mut moment_ok = true;
    let mut zs = Vec::new();
    for n in [90usize, 900] {
        let draws = 100_000;
        let (mut a, mut b, mut c) = (Vec::with_capacity(draws), Vec::with_capacity(draws), Vec::with_capacity(draws));
        for r in 0..draws {
            let x = sample_sphere(n, derive(12, &[n as u64, r as u64])).unwrap().values;
            a.push(x[0] * x[0]);
            b.push(x[0].powi(4));
            c.push(x[0] * x[0] * x[1] * x[1]);
        }
        for (samples, alphas) in [(&a, vec![2i64]), (&b, vec![4]), (&c, vec![2, 2])] {
            let mc = mean_and_se(samples);
            let exact = sphere_moment(n, &alphas).unwrap();
            let z = (mc.mean - exact) / mc.std_error;
            moment_ok &= z.abs() <= 3.0;
            zs.push(z);
        }
    }

    let ts = [0.5, 1.0, 2.0];
    let mut per_n = Vec::new();
    let mut limit_ok = true;
    for big_n in [100usize, 1000, 10_000] {
        let mut c_n = 0.0f64;
        for &t in &ts {
            let s = cosine_surrogate_series(big_n, t).unwrap().value;
            c_n = c_n.max((s - (-0.5 * t * t).exp()).abs() * big_n as f64 / t.powi(4));
            if big_n == 10_000 {
                // the limit is e^{−t²/2}; e^{−t²} is far off
                limit_ok &= (s - (-0.5 * t * t).exp()).abs() < 1e-3 && (s - (-t * t).exp()).abs() > 0.05;
            }
        }
        per_n.push(c_n);
    }
    let c_fit = per_n.iter().fold(0.0f64, |m, &v| m.max(v));
    let c_min = per_n.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let rate_ok = c_fit / c_min <= 1.5;

    let mut mc_ok = true;
    let mut worst = 0.0f64;
    for big_n in [100usize, 1000] {
        for &t in &ts {
            let s = cosine_surrogate_series(big_n, t).unwrap().value;
            let mc = cosine_product_mc(big_n, t, 20_000, derive(12, &[big_n as u64, t.to_bits()])).unwrap();
            let allowed = 3.0 * mc.std_error + c_fit * t.powi(4) / big_n as f64;
            mc_ok &= (mc.mean - s).abs() <= allowed;
            worst = worst.max((mc.mean - s).abs() / allowed);
        }
    }
    Outcome::new(
        moment_ok && rate_ok && limit_ok && mc_ok,
        format!(
            "moment z-scores {}; fitted C per N {} (ratio {:.3}); limit e^(-t²/2): {limit_ok}; MC/series worst {:.2} of allowance",
            zs.iter().map(|z| format!("{z:.2}")).collect::<Vec<_>>().join(" "),
            per_n.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(" "),
            c_fit / c_min,
            worst
        ),
    )
}

fn c13_operator_norm() -> Outcome {
    let n = 8usize;
    let cap = 3.0 * (2.0 * n as f64 / PI).sqrt() + 3.0;
    let g = CouplingGeometry::chain(n).unwrap();
    let mut max_est = 0.0f64;
    let mut under_cap = true;
    for r in 0..200u64 {
        let x = Law::GaussianIid.sample(9 * n, derive(13, &[r])).unwrap();
        let est = lanczos_extremal(&build(&g, &x).unwrap(), 120, 1e-12, derive(13, &[r, 1])).unwrap().estimate;
        under_cap &= est <= cap;
        max_est = max_est.max(est);
    }
    let mut worst = 0.0f64;
    for n in 2..=10usize {
        let g = CouplingGeometry::chain(n).unwrap();
        let h = build(&g, &Law::GaussianIid.sample(9 * n, derive(13, &[1000 + n as u64])).unwrap()).unwrap();
        let dense = eig_dense(&h).unwrap().max_abs();
        let lz = lanczos_extremal(&h, 400, 1e-14, 99).unwrap().estimate;
        worst = worst.max((lz - dense).abs());
    }
    Outcome::new(
        under_cap && worst <= 1e-8,
        format!("max estimate over 200 replicas {max_est:.4} ≤ {cap:.4}: {under_cap}; |Lanczos − dense| ≤ {worst:.1e} for n=2..10"),
    )
}

fn c14_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        n_list: vec![4],
        replicas: 6,
        grid_step: 0.01,
        master_seed: 14,
        ..ExperimentConfig::default()
    };
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let runs: [(&str, &[&str]); 8] = [
        ("spectrum", &[]),
        ("sweep", &[]),
        ("concentration", &["--replicas", "200"]),
        ("lipschitz", &["--pairs", "100", "--f-samples", "2"]),
        ("cf", &[]),
        ("gclass", &["--m", "4,8"]),
        ("sphere", &[]),
        ("moments", &[]),
    ];
    let mut same = Vec::new();
    for (cmd, extra) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "3", "1"] {
            let out = dir.path().join(format!("{cmd}-{threads}-{}", outputs.len()));
            let status = Command::new(env!("CARGO_BIN_EXE_qspin"))
                .args(["--config", cfg_path.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap(), cmd])
                .args(extra)
                .output()
                .unwrap();
            assert!(status.status.code().is_some_and(|c| c == 0 || c == 2), "{cmd}: {status:?}");
            outputs.push(std::fs::read(out.join("rows.csv")).unwrap());
        }
        same.push((cmd, outputs.windows(2).all(|w| w[0] == w[1])));
    }
    let bad: Vec<&str> = same.iter().filter(|(_, ok)| !ok).map(|(c, _)| *c).collect();
    Outcome::new(
        bad.is_empty(),
        format!("8 subcommands × threads 1/3/1, rows.csv byte-identical; differing: {bad:?}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    // cargo test passes harness flags; ignore them
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 14] = [
        (1, "trace identities", c1_trace_identities),
        (2, "HS-norm identity", c2_hs_identity),
        (3, "eigensolver sum rules", c3_sum_rules),
        (4, "Hoffman-Wielandt", c4_hoffman_wielandt),
        (5, "moments", c5_moments),
        (6, "metric engine", c6_metric_engine),
        (7, "Fejer bound", c7_fejer_bound),
        (8, "CF bound", c8_cf_bound),
        (9, "Gaussian trend", c9_gaussian_trend),
        (10, "concentration", c10_concentration),
        (11, "Lipschitz contract", c11_lipschitz),
        (12, "spherical model", c12_spherical),
        (13, "operator norm", c13_operator_norm),
        (14, "reproducibility", c14_reproducibility),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let verdict = match (out.pass, out.known_defect) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known defect in criterion)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!(
            "criterion {id:>2} [{name}] {verdict} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    }
}
