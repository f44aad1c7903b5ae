use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;

use crate::ensembles::Law;
use crate::error::{arg, Error, Result};
use crate::hamiltonian::{CouplingGeometry, HamiltonianOperator};
use crate::pauli::PauliString;
use crate::rng::{generator, mix};

/// Coefficient variance `s²` (after normalization) as an exact fraction.
fn variance(geometry: &CouplingGeometry) -> Result<Ratio<i128>> {
    let den: i128 = match geometry {
        CouplingGeometry::Chain { n } => 9 * *n as i128,
        CouplingGeometry::Graph { edges, .. } => 9 * edges.len() as i128,
        CouplingGeometry::PSpin { .. } => geometry.coefficient_dim() as i128,
    };
    if den == 0 {
        return arg("empty geometry");
    }
    Ok(Ratio::new(1, den))
}

/// Perfect matchings of `0..k` as lists of pairs.
fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for i in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|&(j, _)| j + 1 != i).map(|(_, &x)| x).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[i]));
            out.push(m);
        }
    }
    out
}

/// `2^{-n} E tr H^k` for Gaussian coefficients, exactly, by Wick pairing.
pub fn moment_exact(geometry: &CouplingGeometry, k: usize, law: &Law) -> Result<Ratio<i128>> {
    if !matches!(law, Law::GaussianIid) {
        return arg(format!("exact moments need Gaussian coefficients, got {}", law.tag()));
    }
    if !(1..=4).contains(&k) {
        return arg(format!("moment order must be in 1..=4, got {k}"));
    }
    if k % 2 == 1 {
        return Ok(Ratio::from_integer(0));
    }
    let strings = geometry.strings()?;
    let n = geometry.n_sites();
    let t = strings.len();
    let positions: Vec<usize> = (0..k).collect();
    let mut total = Complex::<i128>::new(0, 0);
    for m in matchings(&positions) {
        // slot[p] = which pair position p belongs to
        let mut slot = vec![0usize; k];
        for (pi, &(a, b)) in m.iter().enumerate() {
            slot[a] = pi;
            slot[b] = pi;
        }
        let pairs = m.len();
        let mut idx = vec![0usize; pairs];
        loop {
            let mut prod = PauliString::identity(n)?;
            for &s in &slot {
                prod = prod.multiply(&strings[idx[s]])?;
            }
            total += prod.trace() / Complex::new(1i128 << n, 0);
            // odometer over term assignments
            let mut d = 0;
            while d < pairs {
                idx[d] += 1;
                if idx[d] < t {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == pairs {
                break;
            }
        }
    }
    if total.im != 0 {
        return Err(Error::Contract("moment has an imaginary part".into()));
    }
    let s2 = variance(geometry)?;
    Ok(Ratio::from_integer(total.re) * s2.pow((k / 2) as i32))
}

pub fn moment_exact_f64(geometry: &CouplingGeometry, k: usize, law: &Law) -> Result<f64> {
    let r = moment_exact(geometry, k, law)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Hutchinson estimates of `2^{-n} tr H^k` for `k = 1..=k_max` with Rademacher
/// probes. `tr H^{a+b}` is read off `⟨H^a z, H^b z⟩`, so each probe costs
/// `⌈k_max/2⌉` matvecs.
pub fn stochastic_moments(h: &HamiltonianOperator, k_max: usize, n_probes: usize, seed: u64) -> Result<Vec<MomentEstimate>> {
    if k_max == 0 || n_probes == 0 {
        return arg("k_max and n_probes must be positive");
    }
    let dim = h.dim();
    let half = k_max.div_ceil(2);
    let per_probe: Vec<Vec<f64>> = (0..n_probes)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut rng = generator(mix(seed, p as u64));
            let z: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
                .collect();
            let mut powers = vec![z];
            for j in 0..half {
                powers.push(h.matvec(&powers[j])?);
            }
            Ok((1..=k_max)
                .map(|k| {
                    let a = k / 2;
                    let b = k - a;
                    let ip: Complex64 = powers[a].iter().zip(&powers[b]).map(|(x, y)| x.conj() * y).sum();
                    ip.re / dim as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let np = n_probes as f64;
    Ok((0..k_max)
        .map(|k| {
            let mean = per_probe.iter().map(|v| v[k]).sum::<f64>() / np;
            let var = if n_probes > 1 {
                per_probe.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (np - 1.0)
            } else {
                0.0
            };
            MomentEstimate {
                mean,
                std_error: (var / np).sqrt(),
            }
        })
        .collect())
}
