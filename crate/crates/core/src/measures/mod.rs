//! Probability metrics on the line: W1 and bounded-Lipschitz distances,
//! reference laws, test functions and Fejér smoothing.

mod dbl;
mod fejer;
mod testfn;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::special::{normal_cdf, normal_pdf};
use crate::spectra::SpectralMeasure;

pub use dbl::{dbl_discrete, dbl_discrete_lp, dbl_fixed_split, dbl_to_law, discretize_law, DblOptions, DblValue, DEFAULT_GRID_STEP};
pub use fejer::{fejer_convolve, fejer_convolve_quadrature, fejer_kernel};
pub use testfn::{g_class_sup, random_bl1, truncate_bl, GClass, PiecewiseLinearFn};

/// Effective support half-width of the standard Gaussian.
pub const GAUSS_CUTOFF: f64 = 8.0;

/// Finite measure on the line: sorted distinct points with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts the support and merges coincident points. Zero weights are dropped.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return arg("points and weights differ in length");
        }
        if points.iter().chain(&weights).any(|x| !x.is_finite()) {
            return arg("measure has a non-finite point or weight");
        }
        if weights.iter().any(|&w| w < 0.0) {
            return arg("negative weight");
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).filter(|&(_, w)| w > 0.0).collect();
        if pairs.is_empty() {
            return arg("empty measure");
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if points.last() == Some(&x) {
                *weights.last_mut().unwrap() += w;
            } else {
                points.push(x);
                weights.push(w);
            }
        }
        Ok(Self { points, weights })
    }

    /// Uniform weights `1/len`.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let len = points.len();
        Self::new(points, vec![w; len])
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl From<&SpectralMeasure> for DiscreteMeasure {
    fn from(m: &SpectralMeasure) -> Self {
        DiscreteMeasure::uniform(m.eigenvalues().to_vec()).expect("spectra are finite and nonempty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum ReferenceLaw {
    StandardGaussian,
    /// Density `2/(π r²) · √(r² − x²)` on `[−r, r]`.
    Semicircle { radius: f64 },
}

impl ReferenceLaw {
    pub fn semicircle() -> Self {
        ReferenceLaw::Semicircle { radius: 2.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReferenceLaw::StandardGaussian => "gauss",
            ReferenceLaw::Semicircle { .. } => "semicircle",
        }
    }

    /// Interval outside which the law has (numerically) no mass.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ReferenceLaw::StandardGaussian => (-GAUSS_CUTOFF, GAUSS_CUTOFF),
            ReferenceLaw::Semicircle { radius } => (-radius, radius),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceLaw::StandardGaussian => normal_pdf(x),
            ReferenceLaw::Semicircle { radius: r } => {
                if x.abs() >= r {
                    0.0
                } else {
                    2.0 / (std::f64::consts::PI * r * r) * (r * r - x * x).sqrt()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceLaw::StandardGaussian => normal_cdf(x),
            ReferenceLaw::Semicircle { radius: r } => {
                let u = (x / r).clamp(-1.0, 1.0);
                0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / std::f64::consts::PI
            }
        }
    }

    /// `∫_{−∞}^x F(y) dy`.
    pub fn cdf_antiderivative(&self, x: f64) -> f64 {
        match *self {
            ReferenceLaw::StandardGaussian => x * normal_cdf(x) + normal_pdf(x),
            ReferenceLaw::Semicircle { radius: r } => {
                if x <= -r {
                    return 0.0;
                }
                if x >= r {
                    return x;
                }
                let u = x / r;
                let s = (1.0 - u * u).sqrt();
                r * (u / 2.0 + (-(s * s * s) / 3.0 + u * u.asin() + s) / std::f64::consts::PI)
            }
        }
    }

    /// Smallest `x` with `F(x) ≥ p`, by bisection to `tol`.
    pub fn quantile(&self, p: f64, tol: f64) -> f64 {
        let (mut lo, mut hi) = match *self {
            ReferenceLaw::StandardGaussian => (-40.0, 40.0),
            ReferenceLaw::Semicircle { radius } => (-radius, radius),
        };
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Crossing tolerance used by [`w1_to_law`].
pub const W1_BISECTION_TOL: f64 = 1e-12;

/// `W1(μ, law) = ∫|F_μ − F|`, exact up to the crossing-point bisection.
pub fn w1_to_law(mu: &DiscreteMeasure, law: &ReferenceLaw) -> f64 {
    w1_to_law_tol(mu, law, W1_BISECTION_TOL)
}

pub fn w1_to_law_tol(mu: &DiscreteMeasure, law: &ReferenceLaw, tol: f64) -> f64 {
    let a = |x: f64| law.cdf_antiderivative(x);
    let total = mu.total_mass();
    let pts = mu.points();
    let mut acc = a(pts[0]);
    let mut c = 0.0;
    for i in 0..pts.len() {
        c += mu.weights()[i] / total;
        let lo = pts[i];
        let Some(&hi) = pts.get(i + 1) else { break };
        let (flo, fhi) = (law.cdf(lo), law.cdf(hi));
        let area = a(hi) - a(lo);
        acc += if flo >= c {
            area - c * (hi - lo)
        } else if fhi <= c {
            c * (hi - lo) - area
        } else {
            let (mut l, mut h) = (lo, hi);
            while h - l > tol {
                let m = 0.5 * (l + h);
                if law.cdf(m) < c {
                    l = m;
                } else {
                    h = m;
                }
            }
            let y = 0.5 * (l + h);
            c * (y - lo) - (a(y) - a(lo)) + (a(hi) - a(y)) - c * (hi - y)
        };
    }
    // ∫_{x_m}^∞ (1 − F) = A(x_m) − x_m for a centred law
    let last = *pts.last().unwrap();
    acc + a(last) - last
}

/// `∫|F_μ − F_ν|` between two discrete probability measures.
pub fn w1_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let (mt, nt) = (mu.total_mass(), nu.total_mass());
    let mut events: Vec<(f64, f64)> = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(&x, &w)| (x, w / mt))
        .chain(nu.points().iter().zip(nu.weights()).map(|(&x, &w)| (x, -w / nt)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut acc = 0.0;
    for w in events.windows(2) {
        diff += w[0].1;
        acc += diff.abs() * (w[1].0 - w[0].0);
    }
    acc
}

/// Fraction of mass with `|x| > t`.
pub fn tail_mass(mu: &DiscreteMeasure, t: f64) -> f64 {
    let total = mu.total_mass();
    mu.points()
        .iter()
        .zip(mu.weights())
        .filter(|(x, _)| x.abs() > t)
        .map(|(_, w)| w)
        .sum::<f64>()
        / total
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailFit {
    /// Smallest `c` with `mean tail(t) ≤ c/t²` on every `t`.
    pub c: f64,
    pub per_t: Vec<(f64, f64)>,
}

/// Replica-averaged tail masses and the constant `c = max_t t² · tail(t)`.
pub fn tail_bound_check(replicas: &[DiscreteMeasure], ts: &[f64]) -> Result<TailFit> {
    if replicas.is_empty() || ts.iter().any(|&t| !(t > 0.0)) {
        return arg("need replicas and positive thresholds");
    }
    let per_t: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let mean = replicas.iter().map(|m| tail_mass(m, t)).sum::<f64>() / replicas.len() as f64;
            (t, mean)
        })
        .collect();
    let c = per_t.iter().fold(0.0f64, |m, &(t, p)| m.max(t * t * p));
    Ok(TailFit { c, per_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
            for &x in &[-1.7, -0.3, 0.0, 0.9, 1.99] {
                let (lo, _) = law.support();
                let q = simpson(|y| law.cdf(y), lo.max(-12.0), x, 20000);
                assert!((law.cdf_antiderivative(x) - q).abs() < 1e-9, "{law:?} x={x}");
            }
        }
        let r = 2.0;
        let s = ReferenceLaw::semicircle();
        assert!((s.cdf_antiderivative(r) - r).abs() < 1e-15);
        assert!(s.cdf_antiderivative(-r).abs() < 1e-15);
    }

    #[test]
    fn cdf_limits() {
        for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
            assert!(law.cdf(-12.0) < 1e-30);
            assert!((law.cdf(12.0) - 1.0).abs() < 1e-15);
            let mut prev = 0.0;
            for k in -100..=100 {
                let v = law.cdf(k as f64 * 0.05);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn w1_dirac_gaussian() {
        let w = w1_to_law(&DiscreteMeasure::dirac(0.0), &ReferenceLaw::StandardGaussian);
        assert!((w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        // E|Z − 1| = 2φ(1) + 2Φ(1) − 1
        let w = w1_to_law(&DiscreteMeasure::dirac(1.0), &ReferenceLaw::StandardGaussian);
        let expect = 2.0 * normal_pdf(1.0) + 2.0 * normal_cdf(1.0) - 1.0;
        assert!((w - expect).abs() < 1e-12);
    }

    #[test]
    fn w1_semicircle_dirac() {
        // E|X| for the radius-2 semicircle is 8/(3π)
        let w = w1_to_law(&DiscreteMeasure::dirac(0.0), &ReferenceLaw::semicircle());
        assert!((w - 8.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn w1_tolerance_invariance() {
        let mu = DiscreteMeasure::uniform(vec![-1.3, -0.2, 0.1, 0.7, 2.2]).unwrap();
        for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
            let a = w1_to_law_tol(&mu, &law, 1e-10);
            let b = w1_to_law_tol(&mu, &law, 1e-12);
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn two_sample_w1() {
        let mu = DiscreteMeasure::uniform(vec![0.0, 1.0]).unwrap();
        assert_eq!(w1_discrete(&mu, &mu), 0.0);
        let nu = DiscreteMeasure::dirac(3.0);
        assert!((w1_discrete(&mu, &nu) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn tails() {
        assert_eq!(tail_mass(&DiscreteMeasure::dirac(0.0), 0.1), 0.0);
        let pm = DiscreteMeasure::uniform(vec![-1.0, 1.0]).unwrap();
        assert_eq!(tail_mass(&pm, 0.5), 1.0);
        let fit = tail_bound_check(&[pm], &[0.5, 2.0]).unwrap();
        assert_eq!(fit.c, 0.25);
    }

    #[test]
    fn merges_coincident_points() {
        let m = DiscreteMeasure::new(vec![1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(m.points(), &[0.0, 1.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!(DiscreteMeasure::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
    }
}
