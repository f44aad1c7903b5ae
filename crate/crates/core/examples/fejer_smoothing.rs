//! Fejér smoothing of a random bounded-Lipschitz function and its sup error.

use qspin::measures::{fejer_convolve, random_bl1};
use qspin::rng::generator;

fn main() -> qspin::Result<()> {
    let r = 4.0;
    let f = random_bl1(&mut generator(4), -r, r, 12);
    println!("f: ‖f‖_BL = {:.4}, {} breakpoints", f.bl_norm(), f.breakpoints().len());
    let xs: Vec<f64> = (0..4001).map(|i| -2.0 * r + i as f64 * 4.0 * r / 4000.0).collect();
    for lambda in [10.0f64, 100.0, 1000.0, 10_000.0] {
        let g = fejer_convolve(&f, lambda, &xs)?;
        let err = xs.iter().zip(&g).fold(0.0f64, |m, (&x, &y)| m.max((f.eval(x) - y).abs()));
        let bound = (8.0 * lambda.ln() + 8.0 * (2.0 * r).ln() + 6.0) / (std::f64::consts::PI * lambda);
        println!("λ={lambda:>7}: sup|f − f_λ| = {err:.6}  bound {bound:.6}");
    }
    Ok(())
}
