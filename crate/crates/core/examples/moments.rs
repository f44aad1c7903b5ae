//! Exact ensemble moments by Wick pairing and Hutchinson estimates at larger n.

use qspin::ensembles::Law;
use qspin::hamiltonian::{build, CouplingGeometry};
use qspin::spectra::{moment_exact, stochastic_moments};

fn main() -> qspin::Result<()> {
    for n in [3, 4, 6, 8] {
        let g = CouplingGeometry::chain(n)?;
        println!("chain n={n}: m2 = {}  m4 = {}", moment_exact(&g, 2, &Law::GaussianIid)?, moment_exact(&g, 4, &Law::GaussianIid)?);
    }
    let g = CouplingGeometry::complete(5)?;
    println!("complete graph n=5: m4 = {}", moment_exact(&g, 4, &Law::GaussianIid)?);

    let n = 16;
    let g = CouplingGeometry::chain(n)?;
    let h = build(&g, &Law::GaussianIid.sample(g.coefficient_dim(), 5)?)?;
    for (k, m) in stochastic_moments(&h, 4, 16, 9)?.iter().enumerate() {
        println!("n={n} single sample 2^-n tr H^{} ≈ {:.4} ± {:.4}", k + 1, m.mean, m.std_error);
    }
    Ok(())
}
