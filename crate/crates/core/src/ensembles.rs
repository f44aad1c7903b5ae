//! Coefficient samplers and exact moment calculators for the unit sphere.
//!
//! The spherical product-of-cosines expectation tends to `e^{-t²/2}` as the
//! dimension grows (not `e^{-t²}`); [`cosine_surrogate_series`] evaluates the
//! quadratic surrogate exactly and the tests pin the limit numerically.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::rng::{generator, mix};
use crate::special::ln_gamma;

/// Which distribution generated a coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    GaussianIid,
    Sphere,
    Custom(CustomLawSpec),
}

impl Law {
    pub fn tag(&self) -> &'static str {
        match self {
            Law::GaussianIid => "gaussian_iid",
            Law::Sphere => "sphere",
            Law::Custom(_) => "custom",
        }
    }

    /// Whether Hamiltonian builders fold in their `1/√(#couplings)`-type
    /// normalization. Sphere coefficients already have unit norm.
    pub fn needs_normalization(&self) -> bool {
        !matches!(self, Law::Sphere)
    }

    /// Draws `dim` coefficients from this law.
    pub fn sample(&self, dim: usize, seed: u64) -> Result<CoefficientSample> {
        match self {
            Law::GaussianIid => sample_gaussian(dim, seed),
            Law::Sphere => sample_sphere(dim, seed),
            Law::Custom(spec) => sample_custom(spec, dim, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSample {
    pub values: Vec<f64>,
    pub law: Law,
    pub seed: u64,
}

impl CoefficientSample {
    /// A sample with explicit values (e.g. hand-picked or all-zero couplings).
    pub fn fixed(values: Vec<f64>, law: Law) -> Self {
        Self { values, law, seed: 0 }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Symmetric, variance-normalizable coefficient law. Draws are rescaled to unit
/// variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomLawSpec {
    pub name: String,
    /// Support points and probabilities for point-mass laws; empty for `uniform`.
    #[serde(default)]
    pub table: Vec<(f64, f64)>,
}

impl CustomLawSpec {
    pub fn rademacher() -> Self {
        Self {
            name: "rademacher".into(),
            table: vec![(-1.0, 0.5), (1.0, 0.5)],
        }
    }

    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            table: Vec::new(),
        }
    }

    pub fn user_table(points: Vec<(f64, f64)>) -> Result<Self> {
        let spec = Self {
            name: "user-table".into(),
            table: points,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "rademacher" => Ok(Self::rademacher()),
            "uniform" => Ok(Self::uniform()),
            other => arg(format!("unknown coefficient law '{other}'")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.name.as_str() {
            "uniform" => Ok(()),
            "rademacher" | "user-table" => {
                if self.table.is_empty() {
                    return arg("point-mass law needs at least one support point");
                }
                let total: f64 = self.table.iter().map(|&(_, p)| p).sum();
                if self.table.iter().any(|&(v, p)| !(p >= 0.0) || !v.is_finite()) {
                    return arg("probabilities must be nonnegative and values finite");
                }
                if (total - 1.0).abs() > 1e-12 {
                    return arg(format!("probabilities sum to {total}, not 1"));
                }
                // symmetric about 0: mass at v equals mass at -v
                for &(v, _) in &self.table {
                    let at = |x: f64| -> f64 {
                        self.table.iter().filter(|&&(u, _)| (u - x).abs() <= 1e-12).map(|&(_, p)| p).sum()
                    };
                    if (at(v) - at(-v)).abs() > 1e-12 {
                        return arg("law must be symmetric about 0");
                    }
                }
                if self.raw_variance() <= 0.0 {
                    return arg("law has zero variance");
                }
                Ok(())
            }
            other => arg(format!("unknown coefficient law '{other}'")),
        }
    }

    /// Variance of the law before rescaling.
    fn raw_variance(&self) -> f64 {
        match self.name.as_str() {
            "uniform" => 1.0,
            _ => self.table.iter().map(|&(v, p)| v * v * p).sum(),
        }
    }

    /// Variance of the rescaled draws (always 1).
    pub fn variance(&self) -> f64 {
        1.0
    }

    /// E|X|³ of the rescaled law.
    pub fn third_abs_moment(&self) -> Option<f64> {
        match self.name.as_str() {
            // U[-√3, √3]: E|X|³ = (√3)³/4
            "uniform" => Some(3f64.sqrt().powi(3) / 4.0),
            "rademacher" | "user-table" => {
                let s = self.raw_variance().sqrt();
                Some(self.table.iter().map(|&(v, p)| (v / s).abs().powi(3) * p).sum())
            }
            _ => None,
        }
    }

    fn draw(&self, rng: &mut impl Rng, scale: f64) -> f64 {
        let u: f64 = rng.gen();
        match self.name.as_str() {
            "uniform" => (2.0 * u - 1.0) * 3f64.sqrt(),
            _ => {
                let mut acc = 0.0;
                for &(v, p) in &self.table {
                    acc += p;
                    if u < acc {
                        return v / scale;
                    }
                }
                self.table.last().map(|&(v, _)| v / scale).unwrap_or(0.0)
            }
        }
    }
}

pub fn sample_gaussian(dim: usize, seed: u64) -> Result<CoefficientSample> {
    if dim == 0 {
        return arg("dimension must be positive");
    }
    let mut rng = generator(seed);
    let values = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Ok(CoefficientSample {
        values,
        law: Law::GaussianIid,
        seed,
    })
}

/// Uniform point on the unit sphere in `R^dim` (normalized Gaussian vector).
pub fn sample_sphere(dim: usize, seed: u64) -> Result<CoefficientSample> {
    if dim < 2 {
        return arg("sphere sampling needs dimension ≥ 2");
    }
    let mut rng = generator(seed);
    loop {
        let mut values: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            values.iter_mut().for_each(|x| *x /= norm);
            return Ok(CoefficientSample {
                values,
                law: Law::Sphere,
                seed,
            });
        }
    }
}

pub fn sample_custom(spec: &CustomLawSpec, dim: usize, seed: u64) -> Result<CoefficientSample> {
    spec.validate()?;
    if dim == 0 {
        return arg("dimension must be positive");
    }
    let scale = spec.raw_variance().sqrt();
    let mut rng = generator(seed);
    let values = (0..dim).map(|_| spec.draw(&mut rng, scale)).collect();
    Ok(CoefficientSample {
        values,
        law: Law::Custom(spec.clone()),
        seed,
    })
}

/// `E[∏ x_i^{α_i}]` for `x` uniform on the unit sphere in `R^dim`; exponents
/// beyond `alphas.len()` are zero. Any odd exponent gives 0 by symmetry.
pub fn sphere_moment(dim: usize, alphas: &[i64]) -> Result<f64> {
    if dim == 0 {
        return arg("dimension must be positive");
    }
    if alphas.iter().any(|&a| a < 0) {
        return arg("exponents must be nonnegative");
    }
    if alphas.len() > dim {
        return Err(Error::Dimension {
            expected: dim,
            got: alphas.len(),
        });
    }
    if alphas.iter().any(|&a| a % 2 != 0) {
        return Ok(0.0);
    }
    // β_i = (α_i + 1)/2, so Γ(β_i)/Γ(1/2) = (α_i − 1)!!/2^{α_i/2} and
    // Γ(N/2)/Γ(N/2 + K) = 1/∏_{j<K}(N/2 + j) with K = Σα_i/2.
    let k_total: i64 = alphas.iter().sum::<i64>() / 2;
    let half_n = dim as f64 / 2.0;
    if k_total <= 256 {
        let mut v = 1.0f64;
        let mut j = 0i64;
        for &a in alphas {
            for i in 0..a / 2 {
                v *= (0.5 + i as f64) / (half_n + j as f64);
                j += 1;
            }
        }
        return Ok(v);
    }
    let half_sqrt_pi_ln = 0.5 * std::f64::consts::PI.ln();
    let mut log = ln_gamma(half_n) - ln_gamma(half_n + k_total as f64);
    for &a in alphas.iter().filter(|&&a| a > 0) {
        log += ln_gamma((a as f64 + 1.0) / 2.0) - half_sqrt_pi_ln;
    }
    Ok(log.exp())
}

/// Terms of `E ∏_{k≤N} (1 − (t x_k)²/2)` beyond this index are never summed.
pub const SERIES_MAX_TERMS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    /// Bound on the omitted tail, `(t²/2)^{m+1}/(m+1)!`.
    pub truncation_bound: f64,
}

/// `E ∏_{k=1}^N (1 − (t x_k)²/2)` for `x` uniform on the sphere in `R^N`,
/// summed as `Σ_k (−t²/2)^k/k! · ∏_{ℓ<k} (1 − ℓ/N)/(1 + 2ℓ/N)`.
pub fn cosine_surrogate_series(n: usize, t: f64) -> Result<SeriesValue> {
    if n == 0 {
        return arg("N must be positive");
    }
    let nf = n as f64;
    let x = t * t / 2.0;
    let max_k = n.min(SERIES_MAX_TERMS);
    let mut term = 1.0f64;
    // Neumaier summation
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    let mut k = 0usize;
    while k < max_k {
        k += 1;
        let l = (k - 1) as f64;
        term *= -x / k as f64 * (1.0 - l / nf) / (1.0 + 2.0 * l / nf);
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;
        if term.abs() < 1e-18 && k as f64 > x {
            break;
        }
    }
    let m = k as i32;
    let truncation_bound = if k == n {
        0.0
    } else {
        ((m + 1) as f64 * x.ln() - ln_gamma(m as f64 + 2.0)).exp()
    };
    Ok(SeriesValue {
        value: sum + comp,
        terms: k + 1,
        truncation_bound,
    })
}

/// Ratio `∏_{ℓ=1}^{k-1} (1 − ℓ/N)/(1 + 2ℓ/N)` multiplying the k-th
/// exponential-series term.
pub fn series_ratio(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    (1..k).map(|l| (1.0 - l as f64 / nf) / (1.0 + 2.0 * l as f64 / nf)).product()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `E ∏ cos(t x_k)` over uniform sphere points.
pub fn cosine_product_mc(n: usize, t: f64, replicas: usize, seed: u64) -> Result<McEstimate> {
    if replicas < 2 {
        return arg("need at least two replicas");
    }
    let samples: Vec<f64> = (0..replicas)
        .map(|r| {
            let x = sample_sphere(n, mix(seed, r as u64))?;
            Ok(x.values.iter().map(|&xk| (t * xk).cos()).product())
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_se(&samples))
}

pub fn mean_and_se(samples: &[f64]) -> McEstimate {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
    }
}
