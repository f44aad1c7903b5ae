use rand::Rng;

use super::dbl::{golden_max, lp_pairing, max_pairing};
use super::DiscreteMeasure;
use crate::error::{arg, Error, Result};

/// Continuous piecewise-linear function: linear between breakpoints,
/// constant outside them.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearFn {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinearFn {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return arg("breakpoints and values must be nonempty and equally long");
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return arg("non-finite breakpoint or value");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return arg("breakpoints must be strictly increasing");
        }
        Ok(Self { xs, ys })
    }

    pub fn zero() -> Self {
        Self {
            xs: vec![0.0],
            ys: vec![0.0],
        }
    }

    /// Tent of the given height on `[center − half_width, center + half_width]`.
    pub fn hat(center: f64, half_width: f64, height: f64) -> Result<Self> {
        Self::new(
            vec![center - half_width, center, center + half_width],
            vec![0.0, height, 0.0],
        )
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&b| b <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.ys.iter().fold(0.0f64, |m, y| m.max(y.abs()))
    }

    pub fn lipschitz(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .fold(0.0f64, |m, (x, y)| m.max((y[1] - y[0]).abs() / (x[1] - x[0])))
    }

    pub fn bl_norm(&self) -> f64 {
        self.sup_norm() + self.lipschitz()
    }

    /// Whether `f` vanishes outside `[lo, hi]`.
    pub fn supported_in(&self, lo: f64, hi: f64) -> bool {
        let n = self.ys.len();
        if self.ys[0] != 0.0 || self.ys[n - 1] != 0.0 {
            return false;
        }
        (1..n - 1).all(|i| self.ys[i] == 0.0 || (self.xs[i - 1] >= lo && self.xs[i + 1] <= hi))
    }

    pub fn integrate(&self, mu: &DiscreteMeasure) -> f64 {
        mu.integrate(|x| self.eval(x)) / mu.total_mass()
    }

    /// The four-branch truncation at `R`: `f` on `[−R, R]`, unit-slope ramps to
    /// zero outside, zero beyond the ramps. No preconditions are checked.
    pub fn truncated(&self, r: f64) -> Self {
        let fr = self.eval(r);
        let fl = self.eval(-r);
        let mut xs = Vec::with_capacity(self.xs.len() + 4);
        let mut ys = Vec::with_capacity(self.xs.len() + 4);
        let mut push = |x: f64, y: f64| {
            if xs.last().is_some_and(|&l: &f64| x <= l) {
                return;
            }
            xs.push(x);
            ys.push(y);
        };
        if fl != 0.0 {
            push(-r - fl.abs(), 0.0);
        }
        push(-r, fl);
        for (&x, &y) in self.xs.iter().zip(&self.ys) {
            if x > -r && x < r {
                push(x, y);
            }
        }
        push(r, fr);
        if fr != 0.0 {
            push(r + fr.abs(), 0.0);
        }
        Self { xs, ys }
    }
}

/// Truncation `f_R` for `f` with `f(0) = 0` and `‖f‖_BL ≤ 1`.
///
/// The result agrees with `f` on `[−R, R]`, is supported in
/// `[−R − |f(−R)|, R + |f(R)|] ⊆ [−2R, 2R]`, and its ramps have slope 1, so
/// `Lip(f_R) = max(Lip f, 1)` whenever `f(±R) ≠ 0`.
pub fn truncate_bl(f: &PiecewiseLinearFn, r: f64) -> Result<PiecewiseLinearFn> {
    if !(r > 0.0) {
        return arg("R must be positive");
    }
    if f.eval(0.0).abs() > 1e-12 {
        return Err(Error::Contract(format!("f(0) = {} ≠ 0", f.eval(0.0))));
    }
    if f.bl_norm() > 1.0 + 1e-12 {
        return Err(Error::Contract(format!("‖f‖_BL = {} > 1", f.bl_norm())));
    }
    Ok(f.truncated(r))
}

/// Random piecewise-linear function on `m` equal pieces of `[lo, hi]`,
/// vanishing at both ends (and at 0 when 0 is a node), rescaled to a
/// BL norm drawn uniformly from `(0, 1]`.
pub fn random_bl1(rng: &mut impl Rng, lo: f64, hi: f64, m: usize) -> PiecewiseLinearFn {
    let h = (hi - lo) / m as f64;
    let xs: Vec<f64> = (0..=m).map(|k| lo + k as f64 * h).collect();
    let mut ys: Vec<f64> = (0..=m)
        .map(|k| if k == 0 || k == m { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    for (x, y) in xs.iter().zip(ys.iter_mut()) {
        if x.abs() < 1e-12 * h {
            *y = 0.0;
        }
    }
    let f = PiecewiseLinearFn { xs, ys };
    let norm = f.bl_norm();
    if norm == 0.0 {
        return f;
    }
    let target: f64 = 1.0 - rng.gen::<f64>();
    let ys = f.ys.iter().map(|y| y * target / norm).collect();
    PiecewiseLinearFn { xs: f.xs, ys }
}

/// The test class: piecewise-linear on the uniform `m`-grid of `[−2R, 2R]`,
/// vanishing at `±2R` and at 0, with `‖g‖_BL ≤ 1`.
///
/// For odd `m`, 0 is the midpoint of a cell and `g(0) = 0` ties the two cell
/// ends together. With `m = 1` the class is `{0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GClass {
    pub r: f64,
    pub m: usize,
}

impl GClass {
    pub fn new(r: f64, m: usize) -> Result<Self> {
        if !(r > 0.0) || m == 0 || m > 2000 {
            return arg("need R > 0 and 1 ≤ m ≤ 2000");
        }
        Ok(Self { r, m })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 4.0 * self.r / self.m as f64;
        (0..=self.m).map(|k| -2.0 * self.r + k as f64 * h).collect()
    }

    pub fn contains(&self, g: &PiecewiseLinearFn, tol: f64) -> bool {
        let nodes = self.nodes();
        let on_grid = g.breakpoints().iter().all(|x| nodes.iter().any(|n| (n - x).abs() <= 1e-12 * self.r));
        on_grid
            && g.eval(0.0).abs() <= tol
            && g.eval(-2.0 * self.r).abs() <= tol
            && g.eval(2.0 * self.r).abs() <= tol
            && g.bl_norm() <= 1.0 + tol
    }

    /// Random member (uniform node values rescaled into the class).
    pub fn sample(&self, rng: &mut impl Rng) -> PiecewiseLinearFn {
        if self.m == 1 {
            return PiecewiseLinearFn::new(self.nodes(), vec![0.0, 0.0]).expect("two nodes");
        }
        let f = random_bl1(rng, -2.0 * self.r, 2.0 * self.r, self.m);
        if self.m % 2 == 0 {
            return f;
        }
        // odd m: make the two nodes around 0 antisymmetric, then rescale
        let k = (self.m - 1) / 2;
        let mut ys = f.ys.clone();
        let avg = 0.5 * (ys[k] + ys[k + 1]);
        ys[k] -= avg;
        ys[k + 1] -= avg;
        let g = PiecewiseLinearFn { xs: f.xs, ys };
        let norm = g.bl_norm();
        if norm > 1.0 {
            let ys = g.ys.iter().map(|y| y / norm).collect();
            PiecewiseLinearFn { xs: g.xs, ys }
        } else {
            g
        }
    }

    /// Node weights of a measure: `∫g dμ = Σ_k g_k W_k` for every class member.
    fn node_weights(&self, mu: &DiscreteMeasure) -> Vec<f64> {
        let nodes = self.nodes();
        let h = nodes[1] - nodes[0];
        let mut w = vec![0.0; nodes.len()];
        let total = mu.total_mass();
        for (&x, &p) in mu.points().iter().zip(mu.weights()) {
            if x <= nodes[0] || x >= nodes[self.m] {
                continue;
            }
            let t = (x - nodes[0]) / h;
            let k = (t.floor() as usize).min(self.m - 1);
            let frac = t - k as f64;
            w[k] += p / total * (1.0 - frac);
            w[k + 1] += p / total * frac;
        }
        w
    }
}

/// `sup_{g ∈ 𝒢} (∫g dμ − ∫g dν)`, exactly.
pub fn g_class_sup(class: &GClass, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let nodes = class.nodes();
    let wm = class.node_weights(mu);
    let wn = class.node_weights(nu);
    let w: Vec<f64> = wm.iter().zip(&wn).map(|(a, b)| a - b).collect();
    let m = class.m;
    if m == 1 {
        return Ok(0.0);
    }
    if m % 2 == 1 {
        let mut pinned = vec![false; m + 1];
        pinned[0] = true;
        pinned[m] = true;
        let k = (m - 1) / 2;
        return Ok(lp_pairing(&nodes, &w, &pinned, Some((k, k + 1)))?.max(0.0));
    }
    let (_, v) = golden_max(
        |l| {
            let bounds: Vec<f64> = (0..=m)
                .map(|k| if k == 0 || k == m || 2 * k == m { 0.0 } else { 1.0 - l })
                .collect();
            max_pairing(&nodes, &w, &bounds, l)
        },
        1e-6,
    );
    Ok(v.max(0.0))
}
