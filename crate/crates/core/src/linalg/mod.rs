//! Sparse symmetric matrices and the linear solvers used by Newton's method.

mod cg;
mod cholesky;
mod order;

pub use cg::{conjugate_gradient, CgReport};
pub use cholesky::{CholeskyFactor, SymbolicCholesky};
pub use order::nested_dissection;

use crate::error::Result;

/// Square sparse matrix in compressed-row form with sorted column indices.
/// Symmetric matrices store both triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given rows of column indices (sorted and
    /// deduplicated here).
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of entry `(i, j)` in `values`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max |a_ij − a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d = d.max((a - self.get(j, i)).abs());
            }
        }
        d
    }
}

/// Direct factorization when the fill fits the budget, preconditioned CG
/// otherwise. The symbolic analysis is computed once per sparsity pattern.
pub struct LinearSolver {
    symbolic: Option<SymbolicCholesky>,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

/// Largest factor size (nonzeros of `L`) accepted for direct solves.
pub const FILL_BUDGET: usize = 40_000_000;

impl LinearSolver {
    /// Analyses `pattern` under the fill-reducing permutation `perm`.
    pub fn new(pattern: &CsrMatrix, perm: Vec<usize>) -> Self {
        let symbolic = SymbolicCholesky::new(pattern, perm);
        let symbolic = (symbolic.factor_nnz() <= FILL_BUDGET).then_some(symbolic);
        Self { symbolic, cg_tol: 1e-14, cg_max_iter: 20 * pattern.n().max(100) }
    }

    /// A solver that always uses CG.
    pub fn iterative(n: usize) -> Self {
        Self { symbolic: None, cg_tol: 1e-14, cg_max_iter: 20 * n.max(100) }
    }

    pub fn is_direct(&self) -> bool {
        self.symbolic.is_some()
    }

    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match &self.symbolic {
            Some(s) => Ok(s.factor(a)?.solve(b)),
            None => conjugate_gradient(a, b, self.cg_tol, self.cg_max_iter).map(|(x, _)| x),
        }
    }
}
