use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{arg_err, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
///
/// Rotations follow `R_P(theta) = exp(-i theta P / 2)`. Two-qubit matrices use
/// the same bit order as the statevector: row index `r = b0 + 2*b1` where `b0`
/// is the bit of the first target.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl GateMatrix {
    pub fn from_rows(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return arg_err(format!(
                "expected {dim}x{dim} entries, got {}",
                entries.len()
            ));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn h() -> Self {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::mat2([[r, r], [r, -r]])
    }

    pub fn x() -> Self {
        Self::mat2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn y() -> Self {
        let i = C64::new(0.0, 1.0);
        Self::mat2([[ZERO, -i], [i, ZERO]])
    }

    pub fn z() -> Self {
        Self::mat2([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn cz() -> Self {
        let mut g = Self::identity(4);
        g.entries[15] = -ONE;
        g
    }

    pub fn rx(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self::mat2([
            [C64::new(c, 0.0), C64::new(0.0, -s)],
            [C64::new(0.0, -s), C64::new(c, 0.0)],
        ])
    }

    pub fn rz(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self::mat2([[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]])
    }

    pub fn rzz(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        let even = C64::new(c, -s);
        let odd = C64::new(c, s);
        let mut g = Self::identity(4);
        for (r, phase) in [even, odd, odd, even].into_iter().enumerate() {
            g.entries[r * 4 + r] = phase;
        }
        g
    }

    fn mat2(m: [[C64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            entries: vec![m[0][0], m[0][1], m[1][0], m[1][1]],
        }
    }

    pub(crate) fn as_mat2(&self) -> Option<[[C64; 2]; 2]> {
        (self.dim == 2).then(|| {
            [
                [self.entries[0], self.entries[1]],
                [self.entries[2], self.entries[3]],
            ]
        })
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Self { dim: d, entries }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return arg_err("matmul dimension mismatch");
        }
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.entries[k * d + c];
                }
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// `self ⊗ rhs` with `rhs` on the low bits, i.e. `rhs` acts on the first
    /// target when the result is applied to `[t_rhs.., t_self..]`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let d = a * b;
        let mut entries = vec![ZERO; d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.entries[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        entries[(r1 * b + r2) * d + (c1 * b + c2)] = x * rhs.entries[r2 * b + c2];
                    }
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return arg_err("add dimension mismatch");
        }
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Largest entrywise modulus of `G†G - I`.
    pub fn unitarity_error(&self) -> f64 {
        let gg = self
            .dagger()
            .matmul(self)
            .expect("same dimension by construction");
        let id = Self::identity(self.dim);
        gg.entries
            .iter()
            .zip(&id.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
