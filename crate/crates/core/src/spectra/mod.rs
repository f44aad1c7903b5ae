//! Spectra of Hermitian operators: dense eigensolves, Lanczos norm estimates,
//! exact and stochastic density-of-states moments, characteristic functions.

mod lanczos;
mod moments;
pub mod tridiag;

use num_complex::Complex64;

use crate::dense::{ComplexMatrix, SymmetricMatrix, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianOperator;
use tridiag::Tridiagonal;

pub use lanczos::{lanczos_extremal, LanczosResult};
pub use moments::{moment_exact, moment_exact_f64, stochastic_moments, MomentEstimate};

/// Sorted eigenvalues with uniform weights `2^{-n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    eigenvalues: Vec<f64>,
    n_sites: usize,
}

impl SpectralMeasure {
    pub fn new(mut eigenvalues: Vec<f64>, n_sites: usize) -> Result<Self> {
        if eigenvalues.len() != 1usize << n_sites {
            return Err(Error::Dimension {
                expected: 1 << n_sites,
                got: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues, n_sites })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `2^{-n} Σ λ_j^k`.
    pub fn moment(&self, k: u32) -> f64 {
        self.eigenvalues.iter().map(|x| x.powi(k as i32)).sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// `2^{-n} Σ_j e^{itλ_j}`.
pub fn cf_empirical(measure: &SpectralMeasure, t: f64) -> Complex64 {
    let n = measure.len() as f64;
    let (re, im) = measure
        .eigenvalues()
        .iter()
        .fold((0.0, 0.0), |(re, im), &x| {
            let (s, c) = (t * x).sin_cos();
            (re + c, im + s)
        });
    Complex64::new(re / n, im / n)
}

/// Largest eigenpair residual `‖Av − λv‖` over spot-checked pairs, with the
/// operator norm it should be compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenCheck {
    pub max_residual: f64,
    pub op_norm: f64,
}

pub fn eig_dense(h: &HamiltonianOperator) -> Result<SpectralMeasure> {
    Ok(eig_dense_checked(h, 0)?.0)
}

/// Dense eigensolve that also verifies `spot` eigenpairs (spread across the
/// spectrum, always including both ends when `spot ≥ 2`).
pub fn eig_dense_checked(h: &HamiltonianOperator, spot: usize) -> Result<(SpectralMeasure, EigenCheck)> {
    if h.n_sites() > MAX_DENSE_SITES {
        return Err(Error::Size(format!(
            "dense eigensolve limited to {MAX_DENSE_SITES} sites"
        )));
    }
    let form = h.real_form()?;
    let embedded = form.is_embedding();
    let (eigs, check) = symmetric_eigen(form.into_matrix(), spot)?;
    let eigs = if embedded { dedup_pairs(&eigs)? } else { eigs };
    Ok((SpectralMeasure::new(eigs, h.n_sites())?, check))
}

/// Eigenvalues of a Hermitian matrix through its real embedding.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let scale = m.hs_norm().max(f64::MIN_POSITIVE);
    if !m.is_hermitian(1e-12 * scale) {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {:.3e})",
            m.max_hermitian_defect()
        )));
    }
    let (eigs, _) = symmetric_eigen(m.real_embedding(), 0)?;
    dedup_pairs(&eigs)
}

fn dedup_pairs(eigs: &[f64]) -> Result<Vec<f64>> {
    if eigs.len() % 2 != 0 {
        return Err(Error::Contract("embedding spectrum has odd length".into()));
    }
    Ok(eigs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// All eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigen(a: SymmetricMatrix, spot: usize) -> Result<(Vec<f64>, EigenCheck)> {
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    if a.max_asymmetry() > 1e-12 * scale {
        return Err(Error::Contract("matrix is not symmetric".into()));
    }
    let keep = if spot > 0 { Some(a.clone()) } else { None };
    let t = Tridiagonal::reduce(a);
    let eigs = t.eigenvalues()?;
    let op_norm = eigs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut check = EigenCheck {
        max_residual: 0.0,
        op_norm,
    };
    if let Some(a) = keep {
        let n = eigs.len();
        let picks: Vec<usize> = if spot == 1 || n == 1 {
            vec![n - 1]
        } else {
            (0..spot.min(n)).map(|k| k * (n - 1) / (spot.min(n) - 1)).collect()
        };
        for idx in picks {
            let lam = eigs[idx];
            let v = t.eigenvector(lam);
            let res = (0..n)
                .map(|i| {
                    let row = &a.data[i * n..(i + 1) * n];
                    let av: f64 = row.iter().zip(&v).map(|(x, y)| x * y).sum();
                    (av - lam * v[i]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            check.max_residual = check.max_residual.max(res);
        }
    }
    Ok((eigs, check))
}
