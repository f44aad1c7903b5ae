//! Exact Pauli-string algebra.
//!
//! A [`PauliString`] is `i^phase · f_1 ⊗ f_2 ⊗ … ⊗ f_n` with each factor one of
//! `I, σ¹, σ², σ³` (axes 0..=3). Site 1 is the leftmost Kronecker factor and
//! addresses the most significant bit of a basis index, so basis index
//! `b = Σ_j b_j 2^(n-j)`.

use std::fmt;

use num_complex::{Complex, Complex64};

use crate::dense::ComplexMatrix;
use crate::error::{Error, Result};

/// Largest supported site count (site masks are `u64`).
pub const MAX_SITES: usize = 63;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<u8>,
    phase_exp: u8,
}

/// Product of two single-site factors: returns (axis, phase exponent added).
#[inline]
fn site_product(a: u8, b: u8) -> (u8, u8) {
    match (a, b) {
        (0, b) => (b, 0),
        (a, 0) => (a, 0),
        (a, b) if a == b => (0, 0),
        (a, b) => {
            let c = 6 - a - b;
            // σ^a σ^b = i ε_abc σ^c
            let cyclic = matches!((a, b), (1, 2) | (2, 3) | (3, 1));
            (c, if cyclic { 1 } else { 3 })
        }
    }
}

/// i^k for k mod 4.
#[inline]
pub fn i_pow(k: u8) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn new(axes: Vec<u8>, phase_exp: u8) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_SITES {
            return Err(Error::Argument(format!(
                "site count must be in 1..={MAX_SITES}, got {}",
                axes.len()
            )));
        }
        if let Some(bad) = axes.iter().find(|&&a| a > 3) {
            return Err(Error::Argument(format!("axis {bad} not in 0..=3")));
        }
        Ok(Self {
            axes,
            phase_exp: phase_exp & 3,
        })
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::new(vec![0; n_sites], 0)
    }

    /// σ_site^(axis) with 1-indexed `site`.
    pub fn single(n_sites: usize, site: usize, axis: u8) -> Result<Self> {
        Self::product_of(n_sites, &[(site, axis)])
    }

    /// Ordered product of single-site operators `σ_{s1}^(a1) σ_{s2}^(a2) …`
    /// (1-indexed sites). Repeated sites are multiplied out with their phase.
    pub fn product_of(n_sites: usize, factors: &[(usize, u8)]) -> Result<Self> {
        let mut out = Self::identity(n_sites)?;
        for &(site, axis) in factors {
            if site == 0 || site > n_sites {
                return Err(Error::Argument(format!("site {site} outside 1..={n_sites}")));
            }
            if axis > 3 {
                return Err(Error::Argument(format!("axis {axis} not in 0..=3")));
            }
            let (c, ph) = site_product(out.axes[site - 1], axis);
            out.axes[site - 1] = c;
            out.phase_exp = (out.phase_exp + ph) & 3;
        }
        Ok(out)
    }

    pub fn n_sites(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[u8] {
        &self.axes
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }

    pub fn weight(&self) -> usize {
        self.axes.iter().filter(|&&a| a != 0).count()
    }

    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|&a| a == 0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase_exp % 2 == 0
    }

    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase_exp = phase_exp & 3;
        self
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n_sites() != other.n_sites() {
            return Err(Error::Dimension {
                expected: self.n_sites(),
                got: other.n_sites(),
            });
        }
        let mut phase = self.phase_exp + other.phase_exp;
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(&a, &b)| {
                let (c, ph) = site_product(a, b);
                phase += ph;
                c
            })
            .collect();
        Ok(Self {
            axes,
            phase_exp: phase & 3,
        })
    }

    /// Whether the two strings commute (otherwise they anticommute).
    pub fn commutes_with(&self, other: &Self) -> bool {
        let clashes = self
            .axes
            .iter()
            .zip(&other.axes)
            .filter(|(&a, &b)| a != 0 && b != 0 && a != b)
            .count();
        clashes % 2 == 0
    }

    /// Exact trace: `i^phase · 2^n` for the identity string, otherwise 0.
    pub fn trace(&self) -> Complex<i128> {
        if !self.is_identity() {
            return Complex::new(0, 0);
        }
        let dim = 1i128 << self.n_sites();
        match self.phase_exp {
            0 => Complex::new(dim, 0),
            1 => Complex::new(0, dim),
            2 => Complex::new(-dim, 0),
            _ => Complex::new(0, -dim),
        }
    }

    /// Bit masks `(x, z)`: basis state `b` maps to `b ^ x` with sign
    /// `(-1)^popcount(b & z)`.
    pub fn masks(&self) -> (u64, u64) {
        let n = self.n_sites();
        let mut x = 0u64;
        let mut z = 0u64;
        for (j, &a) in self.axes.iter().enumerate() {
            let bit = 1u64 << (n - 1 - j);
            if a == 1 || a == 2 {
                x |= bit;
            }
            if a == 2 || a == 3 {
                z |= bit;
            }
        }
        (x, z)
    }

    /// Global factor `i^(phase + #σ²)` that multiplies the signed permutation.
    fn global_factor(&self) -> Complex64 {
        let n_y = self.axes.iter().filter(|&&a| a == 2).count() as u8;
        i_pow(self.phase_exp + n_y)
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(v.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_add(Complex64::new(1.0, 0.0), v, &mut out);
        Ok(out)
    }

    /// `out += coeff · P v` without length checks beyond debug asserts.
    pub fn apply_add(&self, coeff: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), v.len());
        let (x, z) = self.masks();
        let f = coeff * self.global_factor();
        let fneg = -f;
        for (b, &vb) in v.iter().enumerate() {
            let sign_neg = ((b as u64) & z).count_ones() & 1 == 1;
            let target = b ^ x as usize;
            out[target] += if sign_neg { fneg } else { f } * vb;
        }
    }

    /// `e^{iθP} v = cos θ · v + i sin θ · P v` for Hermitian `P` (so `P² = I`).
    pub fn exp_apply(&self, theta: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if !self.is_hermitian() {
            return Err(Error::Contract(format!(
                "exp_apply needs a Hermitian string, phase exponent is {}",
                self.phase_exp
            )));
        }
        self.check_len(v.len())?;
        let mut out: Vec<Complex64> = v.iter().map(|&z| z * theta.cos()).collect();
        self.apply_add(Complex64::new(0.0, theta.sin()), v, &mut out);
        Ok(out)
    }

    /// Dense `2^n × 2^n` matrix. Entries are exactly 0, ±1 or ±i.
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        let dim = self.dim();
        if self.n_sites() > crate::dense::MAX_DENSE_SITES {
            return Err(Error::Size(format!(
                "dense materialization limited to {} sites",
                crate::dense::MAX_DENSE_SITES
            )));
        }
        let mut m = ComplexMatrix::zeros(dim);
        let (x, z) = self.masks();
        let f = self.global_factor();
        for b in 0..dim {
            let neg = ((b as u64) & z).count_ones() & 1 == 1;
            m[(b ^ x as usize, b)] = if neg { -f } else { f };
        }
        Ok(m)
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i·", "-", "-i·"][self.phase_exp as usize];
        f.write_str(prefix)?;
        for &a in &self.axes {
            f.write_str(["I", "X", "Y", "Z"][a as usize])?;
        }
        Ok(())
    }
}
