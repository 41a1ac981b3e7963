//! Dense symmetric tensor algebra for `d ∈ {2, 3}`.
//!
//! Symmetric tensors are stored packed: the diagonal first, then the strict
//! upper triangle row by row.
//!
//! ```text
//! d = 2:  [a11, a22, a12]
//! d = 3:  [a11, a22, a33, a12, a13, a23]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DIM: usize = 3;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Position of `(i, j)` in packed storage.
#[inline]
pub fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    if i == j {
        return i;
    }
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    match (dim, a, b) {
        (2, 0, 1) => 2,
        (3, 0, 1) => 3,
        (3, 0, 2) => 4,
        (3, 1, 2) => 5,
        _ => unreachable!("index ({i}, {j}) out of range for dim {dim}"),
    }
}

/// A full (not necessarily symmetric) `d × d` matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, m: [[0.0; MAX_DIM]; MAX_DIM] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut out = Self::zeros(dim)?;
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        Ok(out)
    }

    pub fn from_rows2(rows: [[f64; 2]; 2]) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = rows[i][j];
            }
        }
        Self { dim: 2, m }
    }

    pub fn from_rows3(rows: [[f64; 3]; 3]) -> Self {
        Self { dim: 3, m: rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }

    /// `Σ M_ij A_ij` against a symmetric tensor.
    pub fn inner_sym(&self, a: &SymTensor) -> Result<f64> {
        if self.dim != a.dim {
            return Err(Error::DimensionMismatch(self.dim, a.dim));
        }
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * a.get(i, j);
            }
        }
        Ok(s)
    }
}

/// Symmetric `d × d` tensor in packed storage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    v: [f64; 6],
}

impl SymTensor {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, v: [0.0; 6] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut out = Self::zeros(dim)?;
        for i in 0..dim {
            out.v[i] = 1.0;
        }
        Ok(out)
    }

    /// Builds a tensor from its packed components (length 3 or 6).
    pub fn from_packed(packed: &[f64]) -> Result<Self> {
        let dim = match packed.len() {
            3 => 2,
            6 => 3,
            n => return Err(Error::InvalidParameter(format!("packed length {n}"))),
        };
        let mut v = [0.0; 6];
        v[..packed.len()].copy_from_slice(packed);
        Ok(Self { dim, v })
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(entries.len())?;
        out.v[..entries.len()].copy_from_slice(entries);
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of independent components, `d(d+1)/2`.
    pub fn packed_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn packed(&self) -> &[f64] {
        &self.v[..self.packed_len()]
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        let n = self.packed_len();
        &mut self.v[..n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.v[packed_index(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.v[packed_index(self.dim, i, j)] = value;
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix { dim: self.dim, m: [[0.0; MAX_DIM]; MAX_DIM] };
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.m[i][j] = self.get(i, j);
            }
        }
        m
    }

    /// Frobenius norm computed from packed storage.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        let d = self.dim;
        let n = self.packed_len();
        let diag: f64 = self.v[..d].iter().map(|x| x * x).sum();
        let off: f64 = self.v[d..n].iter().map(|x| x * x).sum();
        diag + 2.0 * off
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = *self;
        out.v.iter_mut().for_each(|x| *x *= a);
        out
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for k in 0..6 {
            out.v[k] = a * self.v[k] + b * other.v[k];
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpby(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(1.0, other, -1.0)
    }

    pub fn trace(&self) -> f64 {
        self.v[..self.dim].iter().sum()
    }
}

/// Symmetric part `½(M + Mᵀ)`.
pub fn sym(m: &Matrix) -> SymTensor {
    let mut out = SymTensor { dim: m.dim, v: [0.0; 6] };
    for i in 0..m.dim {
        for j in i..m.dim {
            out.set(i, j, 0.5 * (m.m[i][j] + m.m[j][i]));
        }
    }
    out
}

/// `Σ A_ij B_ij` over the full index range.
pub fn frob_inner(a: &SymTensor, b: &SymTensor) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    Ok(frob_inner_unchecked(a, b))
}

#[inline]
pub(crate) fn frob_inner_unchecked(a: &SymTensor, b: &SymTensor) -> f64 {
    let d = a.dim;
    let n = a.packed_len();
    let mut s = 0.0;
    for k in 0..d {
        s += a.v[k] * b.v[k];
    }
    for k in d..n {
        s += 2.0 * a.v[k] * b.v[k];
    }
    s
}

/// `u ⊗s v = ½(u⊗v + (u⊗v)ᵀ)`.
pub fn sym_outer(u: &[f64], v: &[f64]) -> Result<SymTensor> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(u.len(), v.len()));
    }
    let mut out = SymTensor::zeros(u.len())?;
    for i in 0..u.len() {
        for j in i..u.len() {
            out.set(i, j, 0.5 * (u[i] * v[j] + u[j] * v[i]));
        }
    }
    Ok(out)
}

/// Fourth-order tensor `A_ijkl` with the minor symmetries
/// `A_ijkl = A_jikl = A_ijlk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourthOrderTensor {
    dim: usize,
    a: [f64; 81],
}

#[inline]
fn idx4(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

impl FourthOrderTensor {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, a: [0.0; 81] })
    }

    /// The symmetric identity `½(δ_ik δ_jl + δ_il δ_jk)`.
    pub fn sym_identity(dim: usize) -> Result<Self> {
        let mut out = Self::zeros(dim)?;
        out.add_sym_identity(1.0);
        Ok(out)
    }

    pub(crate) fn add_sym_identity(&mut self, c: f64) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.a[idx4(i, j, i, j)] += 0.5 * c;
                self.a[idx4(i, j, j, i)] += 0.5 * c;
            }
        }
    }

    /// Adds `c · P ⊗ P`.
    pub(crate) fn add_outer(&mut self, c: f64, p: &SymTensor) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let pij = p.get(i, j);
                if pij == 0.0 {
                    continue;
                }
                for k in 0..d {
                    for l in 0..d {
                        self.a[idx4(i, j, k, l)] += c * (pij * p.get(k, l));
                    }
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.a[idx4(i, j, k, l)]
    }

    /// `(A[Q])_ij = Σ_kl A_ijkl Q_kl`.
    pub fn apply(&self, q: &SymTensor) -> Result<SymTensor> {
        if q.dim != self.dim {
            return Err(Error::DimensionMismatch(self.dim, q.dim));
        }
        let d = self.dim;
        let mut out = SymTensor { dim: d, v: [0.0; 6] };
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += self.a[idx4(i, j, k, l)] * q.get(k, l);
                    }
                }
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    /// `Σ A_ijkl Q_ij Q_kl`.
    pub fn quadratic_form(&self, q: &SymTensor) -> Result<f64> {
        let aq = self.apply(q)?;
        Ok(frob_inner_unchecked(&aq, q))
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest violation of `A_ijkl = A_jikl = A_ijlk = A_klij`.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let a = self.get(i, j, k, l);
                        worst = worst
                            .max((a - self.get(j, i, k, l)).abs())
                            .max((a - self.get(i, j, l, k)).abs())
                            .max((a - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}
