//! p-spin spectra between the Gaussian and semicircle laws as p grows.

use qspin::harness::{run_distance_sweep, ExperimentConfig, Metric};
use qspin::hamiltonian::GeometrySpec;

fn main() -> qspin::Result<()> {
    let n = 8;
    for p in [1, 2, 4, 6, 8] {
        let cfg = ExperimentConfig {
            model: GeometrySpec { model: "pspin".into(), n, edges: vec![], p: Some(p) },
            n_list: vec![n],
            replicas: 10,
            metrics: vec![Metric::W1Gauss, Metric::W1Semicircle],
            ..ExperimentConfig::default()
        };
        let rep = run_distance_sweep(&cfg)?;
        let g = rep.aggregate(n, "w1_gauss").unwrap().mean;
        let s = rep.aggregate(n, "w1_semicircle").unwrap().mean;
        println!("n={n} p={p}: W1 to Gaussian {g:.4}, to semicircle {s:.4}");
    }
    Ok(())
}
