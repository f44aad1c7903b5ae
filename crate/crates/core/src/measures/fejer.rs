//! Fejér kernel `K_λ(x) = (λ/2π)·(sin(λx/2)/(λx/2))²` and its convolution with
//! piecewise-linear functions.
//!
//! The convolution is evaluated in closed form from the primitives
//! `G0(u) = ∫₀ᵘ K_λ = (Si(λu) − sin²(λu/2)/(λu/2))/π` and
//! `G1(u) = ∫₀ᵘ vK_λ(v)dv = Cin(λ|u|)/(πλ)`.
//! A lobe-by-lobe Gauss–Legendre quadrature is kept as an independent check.

use std::f64::consts::PI;

use super::PiecewiseLinearFn;
use crate::error::{arg, Result};
use crate::special::si_cin;

pub fn fejer_kernel(lambda: f64, x: f64) -> f64 {
    let u = 0.5 * lambda * x;
    let s = if u.abs() < 1e-4 {
        1.0 - u * u / 3.0
    } else {
        (u.sin() / u).powi(2)
    };
    lambda / (2.0 * PI) * s
}

fn primitives(lambda: f64, u: f64) -> (f64, f64) {
    let z = lambda * u.abs();
    if z == 0.0 {
        return (0.0, 0.0);
    }
    let (si, cin) = si_cin(z);
    let half = 0.5 * z;
    let g0 = (si - half.sin().powi(2) / half) / PI;
    (g0.copysign(u), cin / (PI * lambda))
}

/// `(f ∗ K_λ)(x)` at each evaluation point.
pub fn fejer_convolve(f: &PiecewiseLinearFn, lambda: f64, points: &[f64]) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return arg("λ must be positive");
    }
    let xs = f.breakpoints();
    let ys = f.values();
    let n = xs.len();
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    Ok(points
        .iter()
        .map(|&x| {
            for k in 0..n {
                (g0[k], g1[k]) = primitives(lambda, x - xs[k]);
            }
            let mut sum = Neumaier::default();
            sum.add(ys[0] * (0.5 - g0[0]));
            sum.add(ys[n - 1] * (g0[n - 1] + 0.5));
            for k in 0..n - 1 {
                let beta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
                let line = ys[k] + beta * (x - xs[k]);
                sum.add(line * (g0[k] - g0[k + 1]));
                sum.add(-beta * (g1[k] - g1[k + 1]));
            }
            sum.value()
        })
        .collect())
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const GL_X: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 10] = [
    0.066_671_344_308_688_1,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982,
    0.269_266_719_309_996_4,
    0.295_524_224_714_752_9,
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Quadrature reference for compactly supported `f`: the support is cut at
/// the breakpoints of `f` and at the zeros of `y ↦ K_λ(x − y)`, and each piece
/// gets a 10-point Gauss–Legendre rule.
pub fn fejer_convolve_quadrature(f: &PiecewiseLinearFn, lambda: f64, points: &[f64]) -> Result<Vec<f64>> {
    let xs = f.breakpoints();
    let ys = f.values();
    if ys[0] != 0.0 || *ys.last().unwrap() != 0.0 {
        return arg("quadrature reference needs compact support");
    }
    let (lo, hi) = (xs[0], *xs.last().unwrap());
    let period = 2.0 * PI / lambda;
    Ok(points
        .iter()
        .map(|&x| {
            let mut cuts: Vec<f64> = xs.to_vec();
            let k_lo = ((x - hi) / period).ceil() as i64;
            let k_hi = ((x - lo) / period).floor() as i64;
            cuts.extend((k_lo..=k_hi).map(|k| x - k as f64 * period));
            cuts.retain(|c| (lo..=hi).contains(c));
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut sum = Neumaier::default();
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let piece: f64 = GL_X
                    .iter()
                    .zip(GL_W)
                    .map(|(t, wt)| {
                        let y = c + h * t;
                        wt * f.eval(y) * fejer_kernel(lambda, x - y)
                    })
                    .sum();
                sum.add(piece * h);
            }
            sum.value()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let l = 7.0;
        assert_eq!(fejer_kernel(l, 0.0), l / (2.0 * PI));
        assert!(fejer_kernel(l, 2.0 * PI / l).abs() < 1e-15);
        // continuity across the series switch
        let x = 2e-4 / l * 2.0;
        let a = fejer_kernel(l, x * 0.999);
        let b = fejer_kernel(l, x * 1.001);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn kernel_mass() {
        let l = 3.0;
        let f = PiecewiseLinearFn::new(vec![-200.0 / l, -199.0 / l, 199.0 / l, 200.0 / l], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let q = fejer_convolve_quadrature(&f, l, &[0.0]).unwrap()[0];
        assert!((q - 1.0).abs() < 1e-2);
        let exact = fejer_convolve(&f, l, &[0.0]).unwrap()[0];
        assert!((q - exact).abs() < 1e-10);
        // constant function is reproduced exactly
        let one = PiecewiseLinearFn::new(vec![0.0], vec![1.0]).unwrap();
        let v = fejer_convolve(&one, l, &[-3.0, 0.0, 11.0]).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn primitive_derivatives() {
        let l = 5.0;
        for &u in &[-2.3, -0.1, 0.05, 0.4, 3.7] {
            let h = 1e-6;
            let (a0, a1) = primitives(l, u - h);
            let (b0, b1) = primitives(l, u + h);
            let k = fejer_kernel(l, u);
            assert!(((b0 - a0) / (2.0 * h) - k).abs() < 1e-7);
            assert!(((b1 - a1) / (2.0 * h) - u * k).abs() < 1e-7);
        }
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let f = PiecewiseLinearFn::new(vec![-4.0, -1.0, 0.5, 2.0, 4.0], vec![0.0, -0.3, 0.1, 0.4, 0.0]).unwrap();
        let pts: Vec<f64> = (-60..=60).map(|k| k as f64 * 0.1 + 0.013).collect();
        for &l in &[10.0, 100.0, 1000.0] {
            let a = fejer_convolve(&f, l, &pts).unwrap();
            let b = fejer_convolve_quadrature(&f, l, &pts).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9, "λ={l}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_function() {
        let v = fejer_convolve(&PiecewiseLinearFn::zero(), 50.0, &[-1.0, 0.0, 2.0]).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }
}
