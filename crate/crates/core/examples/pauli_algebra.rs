//! Pauli strings: products with phases, exact traces, and matrix-free action.

use num_complex::Complex64;
use qspin::pauli::PauliString;

fn main() -> qspin::Result<()> {
    let n = 3;
    // σ_1^x σ_2^y and σ_1^y σ_2^y
    let a = PauliString::product_of(n, &[(1, 1), (2, 2)])?;
    let b = PauliString::product_of(n, &[(1, 2), (2, 2)])?;
    let ab = a.multiply(&b)?;
    println!("{a} · {b} = {ab}");
    println!("commute: {}", a.commutes_with(&b));
    println!("tr(ab) = {}, tr(a·a) = {}", ab.trace(), a.multiply(&a)?.trace());

    let mut v = vec![Complex64::new(0.0, 0.0); a.dim()];
    v[0] = Complex64::new(1.0, 0.0);
    let w = a.apply(&v)?;
    let hit = w.iter().position(|z| z.norm() > 0.0).unwrap();
    println!("a|000⟩ = {} |{hit:03b}⟩", w[hit]);

    let rotated = a.exp_apply(std::f64::consts::FRAC_PI_4, &v)?;
    let norm: f64 = rotated.iter().map(|z| z.norm_sqr()).sum();
    println!("‖e^(iπ/4 a)|000⟩‖² = {norm}");
    Ok(())
}
