//! Spherical couplings: exact moments, the quadratic cosine surrogate, and
//! its limit e^{-t²/2}.

use qspin::ensembles::{cosine_product_mc, cosine_surrogate_series, sphere_moment};

fn main() -> qspin::Result<()> {
    for n in [90, 900] {
        println!(
            "N={n}: E x1² = {:.6e}  E x1⁴ = {:.6e}  E x1²x2² = {:.6e}",
            sphere_moment(n, &[2])?,
            sphere_moment(n, &[4])?,
            sphere_moment(n, &[2, 2])?
        );
    }
    for t in [0.5, 1.0, 2.0] {
        for n in [100, 1000, 10_000] {
            let s = cosine_surrogate_series(n, t)?;
            println!(
                "t={t} N={n:>5}: series {:.8} ({} terms)  e^(-t²/2) {:.8}  e^(-t²) {:.8}",
                s.value,
                s.terms,
                (-0.5f64 * t * t).exp(),
                (-t * t).exp()
            );
        }
        let mc = cosine_product_mc(1000, t, 5000, 1)?;
        println!("t={t} N= 1000: E∏cos(t x_k) ≈ {:.6} ± {:.1e}", mc.mean, mc.std_error);
    }
    Ok(())
}
