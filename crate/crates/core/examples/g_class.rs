//! Supremum over the finite test class against a held-out density of states.

use qspin::harness::{run_g_class_sup, ExperimentConfig};

fn main() -> qspin::Result<()> {
    let cfg = ExperimentConfig {
        n_list: vec![6, 8],
        replicas: 20,
        ..ExperimentConfig::default()
    };
    let rep = run_g_class_sup(&cfg, &[4, 16, 64, 256], None)?;
    for a in &rep.aggregates {
        println!("n={} {:<12} mean sup {:.5} ± {:.5}", a.n, a.metric, a.mean, a.std_error);
    }
    let fit = &rep.fits[0];
    println!("fit: sup ≈ {:.4}·(√(m/n) + 4R/m), rms residual {:.4}", fit.big_c.unwrap(), fit.residual.unwrap());
    Ok(())
}
