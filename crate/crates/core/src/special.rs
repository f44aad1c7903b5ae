//! Special functions: log-gamma, the normal distribution, and the sine and
//! entire cosine integrals used by the closed-form Fejér convolution.

use std::f64::consts::{FRAC_PI_2, PI};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 − Φ(x), accurate for large positive x.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Returns (Si(x), Cin(x)) for x ≥ 0, where
/// Si(x) = ∫₀ˣ sin t / t dt and Cin(x) = ∫₀ˣ (1 − cos t)/t dt.
pub fn si_cin(x: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0);
    if x <= 2.0 {
        return (si_series(x), cin_series(x));
    }
    // Continued fraction for E1(ix), modified Lentz.
    const FPMIN: f64 = 1e-300;
    let mut b = (1.0, x);
    let mut c = (1.0 / FPMIN, 0.0);
    let mut d = cinv(b);
    let mut h = d;
    for i in 2..200 {
        let a = -((i - 1) as f64).powi(2);
        b.0 += 2.0;
        d = cinv(cadd(cscale(d, a), b));
        c = cadd(b, cscale(cinv(c), a));
        let del = cmul(c, d);
        h = cmul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
            break;
        }
    }
    let h = cmul(h, (x.cos(), -x.sin()));
    let ci = -h.0;
    let si = FRAC_PI_2 + h.1;
    (si, EULER_GAMMA + x.ln() - ci)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^(2k+1)/(2k+1)!
    let mut sum = x;
    let mut k = 0;
    loop {
        k += 1;
        let a = (2 * k) as f64;
        term *= -x2 / (a * (a + 1.0));
        let add = term / (a + 1.0);
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) {
            return sum;
        }
    }
}

fn cin_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = 1.0; // (-1)^(k+1) x^(2k)/(2k)!
    let mut sum = 0.0;
    let mut k = 0;
    loop {
        k += 1;
        let a = (2 * k) as f64;
        term *= -x2 / ((a - 1.0) * a);
        let add = -term / a;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            return sum;
        }
    }
}

type C = (f64, f64);

fn cadd(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cscale(a: C, s: f64) -> C {
    (a.0 * s, a.1 * s)
}

fn cinv(a: C) -> C {
    let n = a.0 * a.0 + a.1 * a.1;
    (a.0 / n, -a.1 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        // 5-point Gauss-Legendre, composite
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let c = a + (p as f64 + 0.5) * h;
                X.iter().zip(W).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    #[test]
    fn si_cin_match_quadrature() {
        for &x in &[0.1, 0.7, 1.9, 2.0, 2.1, 3.5, 7.0, 20.0, 55.5] {
            let (si, cin) = si_cin(x);
            let si_q = gl_integrate(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, 4000);
            let cin_q = gl_integrate(|t| (1.0 - t.cos()) / t, 0.0, x, 4000);
            assert!((si - si_q).abs() < 1e-12, "Si({x}) {si} vs {si_q}");
            assert!((cin - cin_q).abs() < 1e-12, "Cin({x}) {cin} vs {cin_q}");
        }
    }

    #[test]
    fn si_limit() {
        let (si, _) = si_cin(1e6);
        assert!((si - FRAC_PI_2).abs() < 1e-5);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for k in 1..30u32 {
            fact *= k as f64;
            let rel = (ln_gamma(k as f64 + 1.0) - fact.ln()).abs() / fact.ln().max(1.0);
            assert!(rel < 1e-13, "k={k}");
        }
        // Γ(1/2) = √π, Γ(5/2) = 3√π/4
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(2.5) - (0.75 * PI.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }
}
