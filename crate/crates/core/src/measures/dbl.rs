//! Bounded-Lipschitz distance between discrete measures.
//!
//! For a fixed split `‖f‖∞ ≤ M`, `Lip(f) ≤ L` the supremum over `f` on the
//! merged support is a linear program whose dual is a min-cost flow on a path:
//! imbalance `w_i` at point `i` is either absorbed locally at cost `M_i` per
//! unit or carried along edge `i` at cost `L·g_i`. That dual is solved exactly
//! by dynamic programming over convex piecewise-linear functions of the edge
//! flow. The outer split `M = 1 − L` is found by golden section; the value is
//! concave in `L`.

use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{DiscreteMeasure, ReferenceLaw};
use crate::error::{arg, Error, Result};

pub const DEFAULT_GRID_STEP: f64 = 2e-3;
const MAX_GRID_STEP: f64 = 0.05;
const GOLDEN_TOL: f64 = 1e-6;
/// Merged supports above this size are refused.
pub const MAX_SUPPORT: usize = 50_000;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Convex piecewise-linear function stored as weighted slope changes split at
/// the minimizer: `left` holds the kinks left of the flat bottom (total weight
/// = −slope at −∞), `right` those to its right. Keys are offset lazily.
struct Convex {
    left: BTreeMap<Key, f64>,
    right: BTreeMap<Key, f64>,
    left_weight: f64,
    right_weight: f64,
    offset: f64,
    min_value: f64,
}

fn bump(map: &mut BTreeMap<Key, f64>, k: f64, w: f64) {
    if w > 0.0 {
        *map.entry(Key(k)).or_insert(0.0) += w;
    }
}

impl Convex {
    /// `m·|x|`.
    fn abs(m: f64) -> Self {
        let mut f = Self {
            left: BTreeMap::new(),
            right: BTreeMap::new(),
            left_weight: 0.0,
            right_weight: 0.0,
            offset: 0.0,
            min_value: 0.0,
        };
        if m > 0.0 {
            f.left.insert(Key(0.0), m);
            f.right.insert(Key(0.0), m);
            f.left_weight = m;
            f.right_weight = m;
        }
        f
    }

    /// Infimal convolution with `m·|·|`: slopes are clamped to `[−m, m]`.
    fn clamp(&mut self, m: f64) {
        let mut excess = self.left_weight - m;
        while excess > 0.0 {
            let Some(mut e) = self.left.first_entry() else { break };
            let w = *e.get();
            if w <= excess {
                e.remove();
                excess -= w;
            } else {
                *e.get_mut() -= excess;
                excess = 0.0;
            }
        }
        if self.left.is_empty() {
            self.left_weight = 0.0;
        } else {
            self.left_weight = self.left_weight.min(m);
        }
        let mut excess = self.right_weight - m;
        while excess > 0.0 {
            let Some(mut e) = self.right.last_entry() else { break };
            let w = *e.get();
            if w <= excess {
                e.remove();
                excess -= w;
            } else {
                *e.get_mut() -= excess;
                excess = 0.0;
            }
        }
        if self.right.is_empty() {
            self.right_weight = 0.0;
        } else {
            self.right_weight = self.right_weight.min(m);
        }
    }

    /// `x ↦ f(x + d)`.
    fn shift_arg(&mut self, d: f64) {
        self.offset -= d;
    }

    /// Adds `c·|x|`.
    fn add_abs(&mut self, c: f64) {
        if c <= 0.0 {
            return;
        }
        let ka = -self.offset;
        let lmax = self.left.last_key_value().map_or(f64::NEG_INFINITY, |(k, _)| k.0);
        let rmin = self.right.first_key_value().map_or(f64::INFINITY, |(k, _)| k.0);
        self.left_weight += c;
        self.right_weight += c;
        if lmax <= ka && ka <= rmin {
            bump(&mut self.left, ka, c);
            bump(&mut self.right, ka, c);
            return;
        }
        if ka > rmin {
            // minimizer moves right, towards the new kink
            let mut p = rmin;
            let mut v = self.min_value + c * (ka - p);
            let mut s = 0.0;
            loop {
                let Some(mut e) = self.right.first_entry() else { break };
                let x = e.key().0;
                if x >= ka {
                    break;
                }
                let w = *e.get();
                v += (s - c) * (x - p);
                p = x;
                if s + w >= c {
                    let moved = c - s;
                    if w - moved > 0.0 {
                        *e.get_mut() = w - moved;
                    } else {
                        e.remove();
                    }
                    bump(&mut self.left, x, moved);
                    bump(&mut self.right, ka, 2.0 * c);
                    self.min_value = v;
                    return;
                }
                e.remove();
                bump(&mut self.left, x, w);
                s += w;
            }
            v += (s - c) * (ka - p);
            bump(&mut self.left, ka, c - s);
            bump(&mut self.right, ka, c + s);
            self.min_value = v;
        } else {
            let mut p = lmax;
            let mut v = self.min_value + c * (p - ka);
            let mut s = 0.0;
            loop {
                let Some(mut e) = self.left.last_entry() else { break };
                let x = e.key().0;
                if x <= ka {
                    break;
                }
                let w = *e.get();
                v += (s - c) * (p - x);
                p = x;
                if s + w >= c {
                    let moved = c - s;
                    if w - moved > 0.0 {
                        *e.get_mut() = w - moved;
                    } else {
                        e.remove();
                    }
                    bump(&mut self.right, x, moved);
                    bump(&mut self.left, ka, 2.0 * c);
                    self.min_value = v;
                    return;
                }
                e.remove();
                bump(&mut self.right, x, w);
                s += w;
            }
            v += (s - c) * (p - ka);
            bump(&mut self.right, ka, c - s);
            bump(&mut self.left, ka, c + s);
            self.min_value = v;
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let kx = x - self.offset;
        let lmax = self.left.last_key_value().map_or(f64::NEG_INFINITY, |(k, _)| k.0);
        let rmin = self.right.first_key_value().map_or(f64::INFINITY, |(k, _)| k.0);
        let mut v = self.min_value;
        if kx > rmin {
            let (mut p, mut s) = (rmin, 0.0);
            for (k, w) in self.right.iter() {
                if k.0 >= kx {
                    break;
                }
                v += s * (k.0 - p);
                p = k.0;
                s += w;
            }
            v += s * (kx - p);
        } else if kx < lmax {
            let (mut p, mut s) = (lmax, 0.0);
            for (k, w) in self.left.iter().rev() {
                if k.0 <= kx {
                    break;
                }
                v += s * (p - k.0);
                p = k.0;
                s += w;
            }
            v += s * (p - kx);
        }
        v
    }
}

/// `max Σ f_i w_i` subject to `|f_i| ≤ bounds[i]` and
/// `|f_{i+1} − f_i| ≤ lip · (x_{i+1} − x_i)`, exactly.
pub(crate) fn max_pairing(xs: &[f64], w: &[f64], bounds: &[f64], lip: f64) -> f64 {
    debug_assert_eq!(xs.len(), w.len());
    let m = xs.len();
    if m == 0 {
        return 0.0;
    }
    let mut f = Convex::abs(bounds[0]);
    f.shift_arg(w[0]);
    for i in 1..m {
        f.add_abs(lip * (xs[i] - xs[i - 1]));
        f.clamp(bounds[i]);
        f.shift_arg(w[i]);
    }
    f.eval(0.0)
}

/// Maximizes a concave function on `[0, 1]`, returning `(argmax, max)`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, tol: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [0.0, 1.0] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DblValue {
    pub value: f64,
    /// Lipschitz budget `L` at the optimum (`M = 1 − L`).
    pub lipschitz: f64,
    /// Certified discretization slack (0 for discrete-vs-discrete).
    pub slack: f64,
}

/// Merged support of `μ − ν` (both normalized to probability measures).
pub(crate) fn signed_difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
    let (mt, nt) = (mu.total_mass(), nu.total_mass());
    let mut ev: Vec<(f64, f64)> = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(&x, &w)| (x, w / mt))
        .chain(nu.points().iter().zip(nu.weights()).map(|(&x, &w)| (x, -w / nt)))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::with_capacity(ev.len());
    let mut ws: Vec<f64> = Vec::with_capacity(ev.len());
    for (x, w) in ev {
        if xs.last() == Some(&x) {
            *ws.last_mut().unwrap() += w;
        } else {
            xs.push(x);
            ws.push(w);
        }
    }
    (xs, ws)
}

/// Inner value for a fixed Lipschitz budget `lip` (sup bound `1 − lip`).
pub fn dbl_fixed_split(mu: &DiscreteMeasure, nu: &DiscreteMeasure, lip: f64) -> f64 {
    let (xs, ws) = signed_difference(mu, nu);
    let bounds = vec![1.0 - lip; xs.len()];
    max_pairing(&xs, &ws, &bounds, lip)
}

/// `d_BL(μ, ν) = sup { ∫f d(μ − ν) : ‖f‖∞ + Lip(f) ≤ 1 }`.
pub fn dbl_discrete(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DblValue> {
    let (xs, ws) = signed_difference(mu, nu);
    if xs.len() > MAX_SUPPORT {
        return Err(Error::Size(format!("merged support {} exceeds {MAX_SUPPORT}", xs.len())));
    }
    let (lip, value) = golden_max(
        |l| {
            let bounds = vec![1.0 - l; xs.len()];
            max_pairing(&xs, &ws, &bounds, l)
        },
        GOLDEN_TOL,
    );
    Ok(DblValue {
        value: value.max(0.0),
        lipschitz: lip,
        slack: 0.0,
    })
}

/// Builds and solves the joint linear program in `(f, M, L)` with a generic
/// simplex solver. Quadratic in the support size; intended as an oracle.
pub(crate) fn lp_pairing(xs: &[f64], ws: &[f64], pinned: &[bool], zero_sum: Option<(usize, usize)>) -> Result<f64> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let m = p.add_var(0.0, (0.0, 1.0));
    let l = p.add_var(0.0, (0.0, 1.0));
    let f: Vec<_> = xs
        .iter()
        .zip(ws)
        .zip(pinned)
        .map(|((_, &w), &pin)| if pin { p.add_var(w, (0.0, 0.0)) } else { p.add_var(w, (-1.0, 1.0)) })
        .collect();
    p.add_constraint(&[(m, 1.0), (l, 1.0)], ComparisonOp::Le, 1.0);
    for &fi in &f {
        p.add_constraint(&[(fi, 1.0), (m, -1.0)], ComparisonOp::Le, 0.0);
        p.add_constraint(&[(fi, -1.0), (m, -1.0)], ComparisonOp::Le, 0.0);
    }
    for i in 1..f.len() {
        let g = xs[i] - xs[i - 1];
        p.add_constraint(&[(f[i], 1.0), (f[i - 1], -1.0), (l, -g)], ComparisonOp::Le, 0.0);
        p.add_constraint(&[(f[i - 1], 1.0), (f[i], -1.0), (l, -g)], ComparisonOp::Le, 0.0);
    }
    if let Some((a, b)) = zero_sum {
        p.add_constraint(&[(f[a], 1.0), (f[b], 1.0)], ComparisonOp::Eq, 0.0);
    }
    let sol = p
        .solve()
        .map_err(|e| Error::Convergence(format!("linear program failed: {e}")))?;
    Ok(sol.objective())
}

/// Dense-LP oracle for [`dbl_discrete`].
pub fn dbl_discrete_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let (xs, ws) = signed_difference(mu, nu);
    lp_pairing(&xs, &ws, &vec![false; xs.len()], None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DblOptions {
    pub grid_step: f64,
    /// Solve with the dense LP instead of the flow recursion.
    pub use_lp: bool,
}

impl Default for DblOptions {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_GRID_STEP,
            use_lp: false,
        }
    }
}

/// Cell-midpoint discretization of `law` with step `h` over its effective
/// support; mass beyond the support goes to the end cells. Returns the
/// measure and the mass that was moved from outside the support.
pub fn discretize_law(law: &ReferenceLaw, h: f64) -> Result<(DiscreteMeasure, f64)> {
    if !(h > 0.0) || h > MAX_GRID_STEP {
        return arg(format!("grid step must be in (0, {MAX_GRID_STEP}], got {h}"));
    }
    let (lo, hi) = law.support();
    let cells = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / cells as f64;
    let mut points = Vec::with_capacity(cells);
    let mut weights = Vec::with_capacity(cells);
    let mut prev = law.cdf(lo);
    for k in 0..cells {
        let b = if k + 1 == cells { hi } else { lo + (k + 1) as f64 * h };
        let fb = law.cdf(b);
        points.push(lo + (k as f64 + 0.5) * h);
        weights.push(fb - prev);
        prev = fb;
    }
    let below = law.cdf(lo);
    let above = 1.0 - law.cdf(hi);
    weights[0] += below;
    weights[cells - 1] += above;
    Ok((DiscreteMeasure::new(points, weights)?, below + above))
}

/// `d_BL(μ, law)` through a grid discretization of the law. The reported
/// slack bounds the discretization error: `h/2` for moving mass to cell
/// midpoints plus twice the relocated tail mass.
pub fn dbl_to_law(mu: &DiscreteMeasure, law: &ReferenceLaw, opts: &DblOptions) -> Result<DblValue> {
    let (grid, tail) = discretize_law(law, opts.grid_step)?;
    let mut out = if opts.use_lp {
        DblValue {
            value: dbl_discrete_lp(mu, &grid)?,
            lipschitz: f64::NAN,
            slack: 0.0,
        }
    } else {
        dbl_discrete(mu, &grid)?
    };
    let (lo, hi) = law.support();
    let cells = ((hi - lo) / opts.grid_step).ceil();
    out.slack = 0.5 * (hi - lo) / cells + 2.0 * tail;
    Ok(out)
}
