//! Dense real-symmetric eigensolver: Householder reduction to tridiagonal
//! form, implicit-shift QL for the eigenvalues, and inverse iteration plus
//! back-transformation for individual eigenvectors.

use crate::dense::SymmetricMatrix;
use crate::error::{Error, Result};

/// Off-diagonal entries below `QL_TOL · (|d_i| + |d_{i+1}|)` are deflated.
pub const QL_TOL: f64 = 1e-14;

/// `A = Q T Qᵀ` with `Q = H_0 H_1 ⋯ H_{m-3}`, `H_k = I − β_k v_k v_kᵀ` acting on
/// coordinates `k+1..`.
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; length `dim − 1`.
    pub off: Vec<f64>,
    reflectors: Vec<(f64, Vec<f64>)>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Reduces `a` (consumed) using only its upper triangle.
    ///
    /// The rank-2 update of step `k` and the product `A v` needed by step
    /// `k + 1` share one pass over the trailing block: row `k + 1` is updated
    /// first, which fixes the next reflector, and every later row feeds the
    /// next product right after its own update.
    pub fn reduce(a: SymmetricMatrix) -> Self {
        let n = a.dim;
        let mut a = a.data;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];
        let mut p_next = vec![0.0; n];
        let mut have_p = false;
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            diag[k] = a[k * n + k];
            let (alpha, refl) = householder(&a[k * n + k + 1..(k + 1) * n]);
            off[k] = alpha;
            let Some((beta, v)) = refl else {
                reflectors.push((0.0, Vec::new()));
                have_p = false;
                continue;
            };
            let p = &mut p[..m];
            if have_p {
                p.copy_from_slice(&p_next[..m]);
            } else {
                p.iter_mut().for_each(|t| *t = 0.0);
                for i in 0..m {
                    let r = k + 1 + i;
                    symv_row(&a[r * n + r..(r + 1) * n], &v, i, p);
                }
            }
            p.iter_mut().for_each(|t| *t *= beta);
            let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
            let half = 0.5 * beta * pv;
            // w = p − (β pᵀv / 2) v, stored in p
            for (pi, vi) in p.iter_mut().zip(&v) {
                *pi -= half * vi;
            }
            let w = &*p;
            // row k + 1 first
            let r0 = (k + 1) * n + k + 1;
            for (j, aij) in a[r0..r0 + m].iter_mut().enumerate() {
                *aij -= v[0] * w[j] + w[0] * v[j];
            }
            let next = if k + 3 < n {
                householder(&a[r0 + 1..r0 + m]).1
            } else {
                None
            };
            have_p = next.is_some();
            match next {
                Some((_, vn)) => {
                    let pn = &mut p_next[..m - 1];
                    pn.iter_mut().for_each(|t| *t = 0.0);
                    for i in 1..m {
                        let (vi, wi) = (v[i], w[i]);
                        let start = (k + 1 + i) * n + k + 1 + i;
                        let row = &mut a[start..start + m - i];
                        let (head, rest) = row.split_first_mut().unwrap();
                        *head -= vi * w[i] + wi * v[i];
                        let vn_i = vn[i - 1];
                        let acc = fused_update(rest, &v[i + 1..], &w[i + 1..], vi, wi, &vn[i..], vn_i, &mut pn[i..]);
                        pn[i - 1] += acc + *head * vn_i;
                    }
                }
                None => {
                    for i in 1..m {
                        let (vi, wi) = (v[i], w[i]);
                        let start = (k + 1 + i) * n + k + 1 + i;
                        let row = &mut a[start..start + m - i];
                        for (j, aij) in row.iter_mut().enumerate() {
                            *aij -= vi * w[i + j] + wi * v[i + j];
                        }
                    }
                }
            }
            reflectors.push((beta, v));
        }
        if n >= 2 {
            diag[n - 2] = a[(n - 2) * n + n - 2];
            off[n - 2] = a[(n - 2) * n + n - 1];
        }
        if n >= 1 {
            diag[n - 1] = a[n * n - 1];
        }
        Self {
            diag,
            off,
            reflectors,
        }
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        ql_implicit(&mut d, &mut e)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Unit eigenvector of the original matrix for eigenvalue `lambda`, by
    /// inverse iteration on the tridiagonal form.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.dim();
        let scale = self
            .diag
            .iter()
            .chain(&self.off)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let shift = lambda + scale * 1e-13;
        // deterministic, non-degenerate start vector
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
        normalize(&mut y);
        for _ in 0..3 {
            y = solve_shifted(&self.diag, &self.off, shift, &y, scale);
            normalize(&mut y);
        }
        for (beta, v) in self.reflectors.iter().rev() {
            if *beta == 0.0 {
                continue;
            }
            let k = n - v.len();
            let seg = &mut y[k..];
            let dot: f64 = seg.iter().zip(v).map(|(a, b)| a * b).sum();
            for (s, vi) in seg.iter_mut().zip(v) {
                *s -= beta * dot * vi;
            }
        }
        y
    }
}

fn normalize(y: &mut [f64]) {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        y.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Solves `(T − σI) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(d: &[f64], e: &[f64], sigma: f64, b: &[f64], scale: f64) -> Vec<f64> {
    let n = d.len();
    let tiny = scale * 1e-300f64.max(f64::EPSILON * 1e-3);
    // row i holds (a0 at col i, a1 at col i+1, a2 at col i+2) after pivoting
    let mut a0: Vec<f64> = d.iter().map(|di| di - sigma).collect();
    let mut a1: Vec<f64> = e.to_vec();
    a1.push(0.0);
    let mut a2 = vec![0.0; n];
    let mut x = b.to_vec();
    let mut sub: Vec<f64> = e.to_vec();
    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > a0[i].abs() {
            // swap rows i and i+1
            let (r0, r1, r2) = (sub[i], a0[i + 1], a1[i + 1]);
            let (s0, s1, s2) = (a0[i], a1[i], a2[i]);
            a0[i] = r0;
            a1[i] = r1;
            a2[i] = r2;
            x.swap(i, i + 1);
            let f = s0 / r0;
            a0[i + 1] = s1 - f * r1;
            a1[i + 1] = s2 - f * r2;
            x[i + 1] -= f * x[i];
            sub[i] = 0.0;
        } else {
            if a0[i] == 0.0 {
                a0[i] = tiny;
            }
            let f = sub[i] / a0[i];
            a0[i + 1] -= f * a1[i];
            x[i + 1] -= f * x[i];
        }
    }
    if n > 0 && a0[n - 1] == 0.0 {
        a0[n - 1] = tiny;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= a1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= a2[i] * x[i + 2];
        }
        x[i] = s / a0[i];
    }
    x
}

/// Householder vector for `x`: returns `α` (the new subdiagonal entry) and
/// `(β, v)` with `(I − β v vᵀ) x = α e₁`, or `None` when `x` is already
/// a multiple of `e₁`.
fn householder(x: &[f64]) -> (f64, Option<(f64, Vec<f64>)>) {
    let sigma = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if sigma == 0.0 || x[1..].iter().all(|&v| v == 0.0) {
        return (x[0], None);
    }
    let x0 = x[0];
    let alpha = if x0 >= 0.0 { -sigma } else { sigma };
    let beta = 1.0 / (sigma * (sigma + x0.abs()));
    let mut v = x.to_vec();
    v[0] = x0 - alpha;
    (alpha, Some((beta, v)))
}

/// Adds row `i` of a symmetric block (given from its diagonal on) to `p = A v`.
#[inline]
fn symv_row(row: &[f64], v: &[f64], i: usize, p: &mut [f64]) {
    let vi = v[i];
    let acc = dot_axpy(&row[1..], &v[i + 1..], vi, &mut p[i + 1..]);
    p[i] += acc + row[0] * vi;
}

const LANES: usize = 8;

/// `p += s·a` and returns `a·x`; eight independent partial sums so the
/// loop vectorizes.
#[inline]
fn dot_axpy(a: &[f64], x: &[f64], s: f64, p: &mut [f64]) -> f64 {
    let len = a.len();
    let (x, p) = (&x[..len], &mut p[..len]);
    let mut acc = [0.0f64; LANES];
    let mut ac = a.chunks_exact(LANES);
    let mut xc = x.chunks_exact(LANES);
    let mut pc = p.chunks_exact_mut(LANES);
    for ((a, x), p) in (&mut ac).zip(&mut xc).zip(&mut pc) {
        for l in 0..LANES {
            acc[l] += a[l] * x[l];
            p[l] += a[l] * s;
        }
    }
    let mut tail = 0.0;
    for ((a, x), p) in ac.remainder().iter().zip(xc.remainder()).zip(pc.into_remainder()) {
        tail += a * x;
        *p += a * s;
    }
    acc.iter().sum::<f64>() + tail
}

/// Rank-2 update `a −= vi·w + wi·v` fused with [`dot_axpy`] on the result.
#[allow(clippy::too_many_arguments)]
#[inline]
fn fused_update(a: &mut [f64], v: &[f64], w: &[f64], vi: f64, wi: f64, x: &[f64], s: f64, p: &mut [f64]) -> f64 {
    let len = a.len();
    let (v, w, x, p) = (&v[..len], &w[..len], &x[..len], &mut p[..len]);
    let mut acc = [0.0f64; LANES];
    let mut ac = a.chunks_exact_mut(LANES);
    let mut vc = v.chunks_exact(LANES);
    let mut wc = w.chunks_exact(LANES);
    let mut xc = x.chunks_exact(LANES);
    let mut pc = p.chunks_exact_mut(LANES);
    for ((((a, v), w), x), p) in (&mut ac).zip(&mut vc).zip(&mut wc).zip(&mut xc).zip(&mut pc) {
        for l in 0..LANES {
            a[l] -= vi * w[l] + wi * v[l];
            acc[l] += a[l] * x[l];
            p[l] += a[l] * s;
        }
    }
    let mut tail = 0.0;
    let rest = ac.into_remainder().iter_mut().zip(vc.remainder()).zip(wc.remainder()).zip(xc.remainder());
    for ((((a, v), w), x), p) in rest.zip(pc.into_remainder()) {
        *a -= vi * w + wi * v;
        tail += *a * x;
        *p += *a * s;
    }
    acc.iter().sum::<f64>() + tail
}


/// Implicit-shift QL on a symmetric tridiagonal matrix; `e[i]` couples `i`
/// and `i + 1` and `e[n−1]` is scratch. Eigenvalues are left in `d`.
pub fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let budget = 30 * n.max(1);
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= QL_TOL * dd || e[m].abs() < 1e-300 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > budget {
                return Err(Error::Convergence(format!(
                    "QL exceeded {budget} iterations at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = crate::rng::generator(seed);
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn small_cases() {
        let m = SymmetricMatrix::from_rows(1, vec![2.5]).unwrap();
        assert_eq!(Tridiagonal::reduce(m).eigenvalues().unwrap(), vec![2.5]);
        let m = SymmetricMatrix::from_rows(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ev = Tridiagonal::reduce(m).eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let ev = Tridiagonal::reduce(SymmetricMatrix::zeros(5)).eigenvalues().unwrap();
        assert_eq!(ev, vec![0.0; 5]);
    }

    #[test]
    fn trace_and_frobenius_preserved() {
        for &n in &[3usize, 10, 57] {
            let m = random_symmetric(n, n as u64);
            let tr: f64 = (0..n).map(|i| m[(i, i)]).sum();
            let fro2 = m.frobenius().powi(2);
            let ev = Tridiagonal::reduce(m).eigenvalues().unwrap();
            assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12 * n as f64);
            assert!((ev.iter().map(|x| x * x).sum::<f64>() - fro2).abs() < 1e-11 * fro2);
        }
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        let n = 40;
        let m = random_symmetric(n, 9);
        let t = Tridiagonal::reduce(m.clone());
        let ev = t.eigenvalues().unwrap();
        for &lam in &[ev[0], ev[17], ev[n - 1]] {
            let v = t.eigenvector(lam);
            let res: f64 = (0..n)
                .map(|i| {
                    let av: f64 = (0..n).map(|j| m[(i, j)] * v[j]).sum();
                    (av - lam * v[i]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10, "residual {res}");
        }
    }

    #[test]
    fn diagonal_with_repeats() {
        let mut m = SymmetricMatrix::zeros(6);
        for (i, v) in [3.0, -1.0, 3.0, 0.0, -1.0, 3.0].iter().enumerate() {
            m[(i, i)] = *v;
        }
        let t = Tridiagonal::reduce(m);
        assert_eq!(t.eigenvalues().unwrap(), vec![-1.0, -1.0, 0.0, 3.0, 3.0, 3.0]);
    }
}
