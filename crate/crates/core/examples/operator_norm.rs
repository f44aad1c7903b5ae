//! Operator norm by Lanczos against the dense spectrum.

use qspin::ensembles::Law;
use qspin::hamiltonian::{build, CouplingGeometry};
use qspin::spectra::{eig_dense, lanczos_extremal};

fn main() -> qspin::Result<()> {
    for n in [6, 8, 10, 14] {
        let g = CouplingGeometry::chain(n)?;
        let h = build(&g, &Law::GaussianIid.sample(g.coefficient_dim(), n as u64)?)?;
        let lz = lanczos_extremal(&h, 200, 1e-12, 1)?;
        let dense = if n <= 10 { format!("{:.10}", eig_dense(&h)?.max_abs()) } else { "-".into() };
        let cap = 3.0 * (2.0 * n as f64 / std::f64::consts::PI).sqrt();
        println!(
            "n={n:>2} lanczos {:.10} ({} iters, converged {}) dense {dense}  3√(2n/π) = {cap:.3}",
            lz.estimate, lz.iterations, lz.converged
        );
    }
    Ok(())
}
