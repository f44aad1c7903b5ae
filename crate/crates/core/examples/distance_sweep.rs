//! Replica sweep of d_BL and W1 to the Gaussian across n, written to disk.

use qspin::harness::{run_distance_sweep, ExperimentConfig};

fn main() -> qspin::Result<()> {
    let cfg = ExperimentConfig {
        n_list: vec![4, 6, 8],
        replicas: 50,
        output_dir: std::env::temp_dir().join("qspin-sweep"),
        ..ExperimentConfig::default()
    };
    let rep = run_distance_sweep(&cfg)?;
    for a in &rep.aggregates {
        println!("n={} {:<10} {:.5} ± {:.5}", a.n, a.metric, a.mean, a.std_error);
    }
    for f in &rep.fits {
        println!("{}: mean ≈ {:.3}·n^-{:.3}  monotone: {:?}", f.experiment, f.big_c.unwrap(), f.c.unwrap(), f.passed);
    }
    rep.write(&cfg.output_dir, &cfg)?;
    println!("written to {}", cfg.output_dir.display());
    Ok(())
}
