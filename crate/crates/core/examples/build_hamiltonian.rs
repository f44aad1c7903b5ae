//! Random Hamiltonians on a chain, a graph and a p-spin geometry.

use qspin::ensembles::Law;
use qspin::hamiltonian::{build, CouplingGeometry};

fn main() -> qspin::Result<()> {
    let geometries = [
        CouplingGeometry::chain(6)?,
        CouplingGeometry::graph(5, vec![(1, 2), (2, 3), (3, 4), (4, 5), (1, 3)])?,
        CouplingGeometry::pspin(6, 3)?,
    ];
    for g in &geometries {
        let x = Law::GaussianIid.sample(g.coefficient_dim(), 7)?;
        let h = build(g, &x)?;
        println!(
            "{:<40} terms {:>4}  normalization {:.5}  tr H²/2^n {:.4}  real form {}",
            g.to_json(),
            h.terms().len(),
            h.normalization(),
            h.hs_norm_sq() / h.dim() as f64,
            h.has_magic_real_form()
        );
    }
    // sphere couplings carry no extra normalization
    let g = CouplingGeometry::chain(4)?;
    let h = build(&g, &Law::Sphere.sample(g.coefficient_dim(), 1)?)?;
    println!("sphere chain n=4: tr H²/2^n = {:.12}", h.hs_norm_sq() / h.dim() as f64);
    Ok(())
}
