//! W1 and bounded-Lipschitz distances, discrete and to continuous laws.

use qspin::ensembles::Law;
use qspin::hamiltonian::{build, CouplingGeometry};
use qspin::measures::{dbl_discrete, dbl_discrete_lp, dbl_to_law, w1_discrete, w1_to_law, DblOptions, DiscreteMeasure, ReferenceLaw};
use qspin::spectra::eig_dense;

fn main() -> qspin::Result<()> {
    let zero = DiscreteMeasure::dirac(0.0);
    for t in [0.5, 2.0, 10.0] {
        let other = DiscreteMeasure::dirac(t);
        println!(
            "δ0 vs δ{t}: d_BL {:.6} (LP {:.6}, closed form {:.6})  W1 {t}",
            dbl_discrete(&zero, &other)?.value,
            dbl_discrete_lp(&zero, &other)?,
            2.0 * t / (t + 2.0)
        );
        assert_eq!(w1_discrete(&zero, &other), t);
    }
    let opts = DblOptions::default();
    for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
        let d = dbl_to_law(&zero, &law, &opts)?;
        println!("δ0 vs {}: d_BL {:.5} ± {:.1e}  W1 {:.6}", law.name(), d.value, d.slack, w1_to_law(&zero, &law));
    }
    let g = CouplingGeometry::chain(8)?;
    let mu = DiscreteMeasure::from(&eig_dense(&build(&g, &Law::GaussianIid.sample(72, 2)?)?)?);
    for law in [ReferenceLaw::StandardGaussian, ReferenceLaw::semicircle()] {
        let d = dbl_to_law(&mu, &law, &opts)?;
        println!("chain n=8 vs {}: d_BL {:.5} (L = {:.3})  W1 {:.5}", law.name(), d.value, d.lipschitz, w1_to_law(&mu, &law));
    }
    Ok(())
}
