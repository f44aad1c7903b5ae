use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::tridiag::ql_implicit;
use crate::error::{arg, Result};
use crate::hamiltonian::HamiltonianOperator;
use crate::rng::generator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosResult {
    /// Largest |Ritz value|; never exceeds ‖H‖_op.
    pub estimate: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization from a seeded Gaussian start vector.
/// Stops once successive extreme Ritz values move by less than `tol`, or on
/// breakdown (the Krylov space is invariant, so the Ritz values are exact).
pub fn lanczos_extremal(h: &HamiltonianOperator, max_iters: usize, tol: f64, seed: u64) -> Result<LanczosResult> {
    if max_iters < 2 {
        return arg("max_iters must be at least 2");
    }
    let dim = h.dim();
    let steps = max_iters.min(dim);
    let mut rng = generator(seed);
    let mut q: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|z| *z /= qn);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev = f64::NAN;
    let scale = h.hs_norm_sq().sqrt() / (dim as f64).sqrt();
    if scale == 0.0 {
        return Ok(LanczosResult {
            estimate: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    for it in 0..steps {
        h.matvec_into(&q, &mut w)?;
        let a = dot(&q, &w).re;
        alpha.push(a);
        basis.push(q.clone());
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = norm(&w);
        let ritz = ritz_extreme(&alpha, &beta)?;
        let breakdown = b <= 1e-12 * scale;
        if breakdown || (it > 0 && (ritz - prev).abs() < tol) || it + 1 == steps {
            return Ok(LanczosResult {
                estimate: ritz,
                iterations: it + 1,
                converged: breakdown || (it > 0 && (ritz - prev).abs() < tol) || it + 1 == dim,
            });
        }
        prev = ritz;
        beta.push(b);
        q = w.iter().map(|z| z / b).collect();
    }
    unreachable!("loop returns on its last step")
}

fn ritz_extreme(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let mut d = alpha.to_vec();
    let mut e = beta.to_vec();
    e.push(0.0);
    ql_implicit(&mut d, &mut e)?;
    Ok(d.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}
