//! Random spin-glass operators: the cyclic nearest-neighbour chain, arbitrary
//! coupling graphs and p-spin glasses.
//!
//! Coefficients are consumed in lexicographic `(a, b, j)` order with the site
//! (or edge, or subset) index varying fastest. For p-spin models the axis tuple
//! is the outer index and size-`p` subsets, in lexicographic order, the inner
//! one, so that `p = 2` reproduces the complete graph term for term.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{ComplexMatrix, SymmetricMatrix, MAX_DENSE_SITES};
use crate::ensembles::{CoefficientSample, Law};
use crate::error::{arg, Error, Result};
use crate::pauli::{i_pow, PauliString, MAX_SITES};

/// Hard cap on the number of terms a builder will allocate.
pub const MAX_TERMS: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CouplingGeometry {
    Chain { n: usize },
    /// Edges are 1-indexed site pairs; the first site of each pair carries axis `a`.
    Graph { n: usize, edges: Vec<(usize, usize)> },
    PSpin { n: usize, p: usize },
}

/// On-disk form: `{"model": "chain"|"graph"|"pspin", "n": .., "edges": [[i, j], ..], "p": ..}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub model: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

impl TryFrom<&GeometrySpec> for CouplingGeometry {
    type Error = Error;
    fn try_from(spec: &GeometrySpec) -> Result<Self> {
        let g = match spec.model.as_str() {
            "chain" => CouplingGeometry::Chain { n: spec.n },
            "graph" => CouplingGeometry::Graph {
                n: spec.n,
                edges: spec.edges.iter().map(|e| (e[0], e[1])).collect(),
            },
            "pspin" => CouplingGeometry::PSpin {
                n: spec.n,
                p: spec.p.ok_or_else(|| Error::Argument("pspin model needs 'p'".into()))?,
            },
            other => return arg(format!("unknown model '{other}'")),
        };
        g.validate()?;
        Ok(g)
    }
}

impl From<&CouplingGeometry> for GeometrySpec {
    fn from(g: &CouplingGeometry) -> Self {
        match g {
            CouplingGeometry::Chain { n } => GeometrySpec {
                model: "chain".into(),
                n: *n,
                edges: Vec::new(),
                p: None,
            },
            CouplingGeometry::Graph { n, edges } => GeometrySpec {
                model: "graph".into(),
                n: *n,
                edges: edges.iter().map(|&(i, j)| [i, j]).collect(),
                p: None,
            },
            CouplingGeometry::PSpin { n, p } => GeometrySpec {
                model: "pspin".into(),
                n: *n,
                edges: Vec::new(),
                p: Some(*p),
            },
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Size-`p` subsets of `1..=n` in lexicographic order.
fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=p).collect();
    if p == 0 || p > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = p;
        while i > 0 && cur[i - 1] == n - p + i {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for k in i..p {
            cur[k] = cur[k - 1] + 1;
        }
    }
}

impl CouplingGeometry {
    pub fn chain(n: usize) -> Result<Self> {
        let g = Self::Chain { n };
        g.validate()?;
        Ok(g)
    }

    pub fn graph(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Self::Graph { n, edges };
        g.validate()?;
        Ok(g)
    }

    /// The cyclic chain written as a graph: edges `(j, j+1)` and `(n, 1)`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::graph(n, (1..=n).map(|j| (j, j % n + 1)).collect())
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = subsets(n, 2).into_iter().map(|s| (s[0], s[1])).collect();
        Self::graph(n, edges)
    }

    pub fn pspin(n: usize, p: usize) -> Result<Self> {
        let g = Self::PSpin { n, p };
        g.validate()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GeometrySpec = serde_json::from_str(text)?;
        Self::try_from(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&GeometrySpec::from(self)).expect("geometry serializes")
    }

    pub fn n_sites(&self) -> usize {
        match self {
            Self::Chain { n } | Self::Graph { n, .. } | Self::PSpin { n, .. } => *n,
        }
    }

    /// Same geometry on a different number of sites (graphs keep their edges).
    pub fn with_sites(&self, n: usize) -> Result<Self> {
        let g = match self {
            Self::Chain { .. } => Self::Chain { n },
            Self::Graph { edges, .. } => Self::Graph { n, edges: edges.clone() },
            Self::PSpin { p, .. } => Self::PSpin { n, p: *p },
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 || n > MAX_SITES {
            return arg(format!("site count must be in 1..={MAX_SITES}, got {n}"));
        }
        match self {
            Self::Chain { n } => {
                if *n < 2 {
                    return arg("chain needs n ≥ 2 (a one-site ring gives non-Hermitian terms)");
                }
            }
            Self::Graph { n, edges } => {
                if edges.is_empty() {
                    return arg("graph needs at least one edge");
                }
                let mut seen = std::collections::HashSet::new();
                for &(i, j) in edges {
                    if i == 0 || j == 0 || i > *n || j > *n {
                        return arg(format!("edge ({i}, {j}) outside sites 1..={n}"));
                    }
                    if i == j {
                        return arg(format!("self-loop at site {i}"));
                    }
                    if !seen.insert((i.min(j), i.max(j))) {
                        return arg(format!("duplicate edge ({i}, {j})"));
                    }
                }
            }
            Self::PSpin { n, p } => {
                if *p == 0 || p > n {
                    return arg(format!("p-spin needs 1 ≤ p ≤ n, got p={p}, n={n}"));
                }
            }
        }
        let count = self.try_coefficient_dim()?;
        if count > MAX_TERMS {
            return Err(Error::Size(format!("{count} terms exceeds the {MAX_TERMS} cap")));
        }
        Ok(())
    }

    fn try_coefficient_dim(&self) -> Result<usize> {
        let overflow = || Error::Size("term count overflows".into());
        match self {
            Self::Chain { n } => Ok(9 * n),
            Self::Graph { edges, .. } => Ok(9 * edges.len()),
            Self::PSpin { n, p } => {
                let c = binomial(*n, *p).ok_or_else(overflow)?;
                3usize
                    .checked_pow(*p as u32)
                    .and_then(|t| t.checked_mul(c))
                    .ok_or_else(overflow)
            }
        }
    }

    /// Number of coefficients (and terms) the builder consumes.
    pub fn coefficient_dim(&self) -> usize {
        self.try_coefficient_dim().expect("validated geometry")
    }

    /// Prefactor folded into Gaussian and custom coefficients.
    pub fn normalization(&self) -> f64 {
        match self {
            Self::Chain { n } => 1.0 / (3.0 * (*n as f64).sqrt()),
            Self::Graph { edges, .. } => 1.0 / (3.0 * (edges.len() as f64).sqrt()),
            Self::PSpin { n, p } => {
                let c = binomial(*n, *p).expect("validated geometry") as f64;
                let mut scale = 3f64.powi((*p / 2) as i32);
                if p % 2 == 1 {
                    scale *= 3f64.sqrt();
                }
                1.0 / (scale * c.sqrt())
            }
        }
    }

    /// Pauli strings in coefficient order.
    pub fn strings(&self) -> Result<Vec<PauliString>> {
        self.validate()?;
        let n = self.n_sites();
        let mut out = Vec::with_capacity(self.coefficient_dim());
        match self {
            Self::Chain { n } => {
                for a in 1..=3u8 {
                    for b in 1..=3u8 {
                        for j in 1..=*n {
                            out.push(PauliString::product_of(*n, &[(j, a), (j % n + 1, b)])?);
                        }
                    }
                }
            }
            Self::Graph { edges, .. } => {
                for a in 1..=3u8 {
                    for b in 1..=3u8 {
                        for &(i, j) in edges {
                            out.push(PauliString::product_of(n, &[(i, a), (j, b)])?);
                        }
                    }
                }
            }
            Self::PSpin { p, .. } => {
                let sets = subsets(n, *p);
                let n_axes = 3usize.pow(*p as u32);
                for code in 0..n_axes {
                    // most significant digit is the first site of the subset
                    let axes: Vec<u8> = (0..*p)
                        .map(|k| ((code / 3usize.pow((*p - 1 - k) as u32)) % 3) as u8 + 1)
                        .collect();
                    for set in &sets {
                        let mut ax = vec![0u8; n];
                        for (&site, &a) in set.iter().zip(&axes) {
                            ax[site - 1] = a;
                        }
                        out.push(PauliString::new(ax, 0)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Precomputed action of one term: `out[b ^ x] += factor · (−1)^{|b ∧ z|} v[b]`.
#[derive(Clone, Copy, Debug)]
struct Kernel {
    x: u64,
    z: u64,
    factor: Complex64,
}

#[derive(Clone, Debug)]
pub struct HamiltonianOperator {
    n_sites: usize,
    geometry: CouplingGeometry,
    law: Law,
    normalization: f64,
    terms: Vec<(f64, PauliString)>,
    kernels: Vec<Kernel>,
}

pub fn build(geometry: &CouplingGeometry, x: &CoefficientSample) -> Result<HamiltonianOperator> {
    let strings = geometry.strings()?;
    if x.dimension() != strings.len() {
        return arg(format!(
            "coefficient vector has dimension {}, geometry needs {}",
            x.dimension(),
            strings.len()
        ));
    }
    let normalization = if x.law.needs_normalization() {
        geometry.normalization()
    } else {
        1.0
    };
    let terms: Vec<(f64, PauliString)> = x
        .values
        .iter()
        .zip(strings)
        .map(|(&c, s)| (c * normalization, s))
        .collect();
    let kernels = terms
        .iter()
        .map(|(c, s)| {
            let (xm, zm) = s.masks();
            let n_y = s.axes().iter().filter(|&&a| a == 2).count() as u8;
            Kernel {
                x: xm,
                z: zm,
                factor: i_pow(s.phase_exp() + n_y) * *c,
            }
        })
        .collect();
    Ok(HamiltonianOperator {
        n_sites: geometry.n_sites(),
        geometry: geometry.clone(),
        law: x.law.clone(),
        normalization,
        terms,
        kernels,
    })
}

/// `x_{a,b,j} σ_j^(a) σ_{j+1}^(b)` summed over the cyclic chain.
pub fn build_chain(n: usize, x: &CoefficientSample) -> Result<HamiltonianOperator> {
    build(&CouplingGeometry::chain(n)?, x)
}

pub fn build_graph(geometry: &CouplingGeometry, x: &CoefficientSample) -> Result<HamiltonianOperator> {
    match geometry {
        CouplingGeometry::Graph { .. } => build(geometry, x),
        _ => arg("build_graph needs a graph geometry"),
    }
}

pub fn build_pspin(n: usize, p: usize, x: &CoefficientSample) -> Result<HamiltonianOperator> {
    build(&CouplingGeometry::pspin(n, p)?, x)
}

impl HamiltonianOperator {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn geometry(&self) -> &CouplingGeometry {
        &self.geometry
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|(c, _)| *c).collect()
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    /// Overwrites `out` with `H v`.
    pub fn matvec_into(&self, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if v.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: if v.len() != self.dim() { v.len() } else { out.len() },
            });
        }
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for k in &self.kernels {
            if k.factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            let x = k.x as usize;
            let z = k.z;
            for (b, &vb) in v.iter().enumerate() {
                let t = k.factor * vb;
                if (b as u64 & z).count_ones() & 1 == 1 {
                    out[b ^ x] -= t;
                } else {
                    out[b ^ x] += t;
                }
            }
        }
        Ok(())
    }

    /// Coefficients merged over identical strings (they differ only when a
    /// geometry couples the same sites twice, e.g. the two-site ring).
    pub fn merged_terms(&self) -> HashMap<PauliString, f64> {
        let mut m: HashMap<PauliString, f64> = HashMap::new();
        for (c, s) in &self.terms {
            let sign = if s.phase_exp() == 2 { -1.0 } else { 1.0 };
            *m.entry(s.clone().with_phase(0)).or_default() += sign * c;
        }
        m
    }

    /// `‖H‖²_HS = tr H²`, exact over merged strings.
    pub fn hs_norm_sq(&self) -> f64 {
        let scale = self.dim() as f64;
        let mut sq: Vec<f64> = self.merged_terms().values().map(|c| c * c).collect();
        sq.sort_by(f64::total_cmp);
        sq.iter().sum::<f64>() * scale
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        self.check_dense()?;
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in &self.kernels {
            for b in 0..dim {
                let neg = (b as u64 & k.z).count_ones() & 1 == 1;
                m[(b ^ k.x as usize, b)] += if neg { -k.factor } else { k.factor };
            }
        }
        Ok(m)
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::Size(format!(
                "dense materialization limited to {MAX_DENSE_SITES} sites, got {}",
                self.n_sites
            )));
        }
        Ok(())
    }

    /// Whether [`Self::real_form`] can use the magic basis on site pairs.
    pub fn has_magic_real_form(&self) -> bool {
        self.n_sites % 2 == 0
            && self
                .terms
                .iter()
                .all(|(_, s)| s.weight() % 2 == 0 && s.is_hermitian())
    }

    /// A real symmetric matrix with the same spectrum as `H`.
    ///
    /// For an even number of sites and even-weight terms, `H` commutes with the
    /// antiunitary `(σ²)^{⊗n} K` and is real in the product of magic bases on
    /// the pairs `(1,2), (3,4), …` (dimension `2^n`). Otherwise the
    /// `2^{n+1}`-dimensional embedding is returned and each eigenvalue appears
    /// twice.
    pub fn real_form(&self) -> Result<RealForm> {
        self.check_dense()?;
        if self.has_magic_real_form() {
            Ok(RealForm::Magic(self.magic_matrix()?))
        } else {
            Ok(RealForm::Embedding(self.to_dense()?.real_embedding()))
        }
    }

    fn magic_matrix(&self) -> Result<SymmetricMatrix> {
        let blocks = self.n_sites / 2;
        let table = magic_block_table();
        let dim = self.dim();
        let mut out = SymmetricMatrix::zeros(dim);
        for (c, s) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            let ax = s.axes();
            let per_block: Vec<&BlockMonomial> = (0..blocks)
                .map(|k| &table[(ax[2 * k] * 4 + ax[2 * k + 1]) as usize])
                .collect();
            let global = i_pow(s.phase_exp()) * *c;
            for col in 0..dim {
                let mut row = 0usize;
                let mut val = global;
                for (k, blk) in per_block.iter().enumerate() {
                    let shift = 2 * (blocks - 1 - k);
                    let d = (col >> shift) & 3;
                    row |= blk.perm[d] << shift;
                    val *= blk.val[d];
                }
                if val.im.abs() > 1e-12 * val.re.abs().max(c.abs()) {
                    return Err(Error::Contract(format!("term {s} is not real in the magic basis")));
                }
                out.data[row * dim + col] += val.re;
            }
        }
        Ok(out)
    }

    /// `‖H − H'‖_HS` through the coefficient identity
    /// `2^{n/2} · ‖c − c'‖` (exact when the term strings are pairwise distinct).
    pub fn hs_distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let d2: f64 = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|((a, _), (b, _))| (a - b).powi(2))
            .sum();
        Ok((self.dim() as f64 * d2).sqrt())
    }

    /// `‖H − H'‖_HS` from coefficients merged over identical strings.
    pub fn hs_distance_merged(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let mut m = self.merged_terms();
        for (s, c) in other.merged_terms() {
            *m.entry(s).or_default() -= c;
        }
        Ok((self.dim() as f64 * m.values().map(|c| c * c).sum::<f64>()).sqrt())
    }

    /// Brute force `√tr[(H − H')²]` from dense matrices.
    pub fn hs_distance_dense(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.to_dense()?.sub(&other.to_dense()?)?.hs_norm())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry || self.law.tag() != other.law.tag() {
            return arg("operators were built from different geometries or laws");
        }
        Ok(())
    }
}

pub enum RealForm {
    Magic(SymmetricMatrix),
    Embedding(SymmetricMatrix),
}

impl RealForm {
    pub fn matrix(&self) -> &SymmetricMatrix {
        match self {
            RealForm::Magic(m) | RealForm::Embedding(m) => m,
        }
    }

    pub fn into_matrix(self) -> SymmetricMatrix {
        match self {
            RealForm::Magic(m) | RealForm::Embedding(m) => m,
        }
    }

    pub fn is_embedding(&self) -> bool {
        matches!(self, RealForm::Embedding(_))
    }
}

/// Two-site Pauli operator in the magic basis: column `d` maps to row
/// `perm[d]` with weight `val[d]`.
#[derive(Clone, Copy, Debug)]
struct BlockMonomial {
    perm: [usize; 4],
    val: [Complex64; 4],
}

fn magic_basis() -> [[Complex64; 4]; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    // components on |00>, |01>, |10>, |11>
    [
        [re(r), z, z, re(r)],
        [im(r), z, z, im(-r)],
        [z, im(r), im(r), z],
        [z, re(r), re(-r), z],
    ]
}

fn magic_block_table() -> Vec<BlockMonomial> {
    let basis = magic_basis();
    let mut table = Vec::with_capacity(16);
    for a in 0..4u8 {
        for b in 0..4u8 {
            let p = PauliString::new(vec![a, b], 0).expect("two-site string");
            let mut perm = [0usize; 4];
            let mut val = [Complex64::new(0.0, 0.0); 4];
            for (d, m) in basis.iter().enumerate() {
                let pm = p.apply(m).expect("length 4");
                for (r, mr) in basis.iter().enumerate() {
                    let overlap: Complex64 = mr.iter().zip(&pm).map(|(u, w)| u.conj() * w).sum();
                    if overlap.norm() > 0.5 {
                        perm[d] = r;
                        val[d] = Complex64::new(overlap.re.round(), overlap.im.round());
                    }
                }
            }
            table.push(BlockMonomial { perm, val });
        }
    }
    table
}
