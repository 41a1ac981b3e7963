use super::CsrMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Symbolic analysis of `P A Pᵀ = L Lᵀ`: elimination tree and column
/// counts of `L` for a fixed sparsity pattern and permutation.
#[derive(Clone, Debug)]
pub struct SymbolicCholesky {
    n: usize,
    perm: Vec<usize>,
    /// Upper triangle of the permuted matrix by columns: rows and positions
    /// into the values of the original matrix.
    cp: Vec<usize>,
    ci: Vec<usize>,
    cmap: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
}

/// Numeric factor `L` stored by columns, diagonal entry first.
#[derive(Clone, Debug)]
pub struct CholeskyFactor<'s> {
    symbolic: &'s SymbolicCholesky,
    li: Vec<usize>,
    lx: Vec<f64>,
}

// Nonzero pattern of row k of L, written to stack[top..n].
fn ereach(
    k: usize,
    cp: &[usize],
    ci: &[usize],
    parent: &[usize],
    mark: &mut [usize],
    stack: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = k;
    for &i0 in &ci[cp[k]..cp[k + 1]] {
        let mut i = i0;
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl SymbolicCholesky {
    /// `perm[k]` is the original index eliminated at step `k`.
    pub fn new(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.n();
        assert_eq!(perm.len(), n, "permutation length");
        let mut pinv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        // column k of the permuted upper triangle = row perm[k] restricted to
        // permuted indices ≤ k
        let mut cp = Vec::with_capacity(n + 1);
        let mut ci = Vec::new();
        let mut cmap = Vec::new();
        cp.push(0);
        for k in 0..n {
            let row = perm[k];
            let (cols, _) = a.row(row);
            let base = a.position(row, cols.first().copied().unwrap_or(row)).unwrap_or(0);
            for (off, &j) in cols.iter().enumerate() {
                let pj = pinv[j];
                if pj <= k {
                    ci.push(pj);
                    cmap.push(base + off);
                }
            }
            cp.push(ci.len());
        }
        // elimination tree with path compression
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                let mut i = i0;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }
        // column counts from the row patterns
        let mut count = vec![1usize; n];
        let mut mark = vec![NONE; n];
        let mut stack = vec![0; n];
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut mark, &mut stack);
            for &i in &stack[top..n] {
                count[i] += 1;
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for k in 0..n {
            lp.push(lp[k] + count[k]);
        }
        Self { n, perm, cp, ci, cmap, parent, lp }
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Up-looking numeric factorization of a matrix with the analysed
    /// pattern. A nonpositive pivot yields `DefinitenessLost`.
    pub fn factor(&self, a: &CsrMatrix) -> Result<CholeskyFactor<'_>> {
        let n = self.n;
        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut next: Vec<usize> = self.lp[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut mark = vec![NONE; n];
        let mut stack = vec![0; n];
        for k in 0..n {
            let top = ereach(k, &self.cp, &self.ci, &self.parent, &mut mark, &mut stack);
            for p in self.cp[k]..self.cp[k + 1] {
                x[self.ci[p]] = a.values[self.cmap[p]];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..n] {
                let lki = x[i] / lx[self.lp[i]];
                x[i] = 0.0;
                for p in self.lp[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::DefinitenessLost(self.perm[k]));
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(CholeskyFactor { symbolic: self, li, lx })
    }
}

impl CholeskyFactor<'_> {
    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = self.symbolic;
        let n = s.n;
        let mut y: Vec<f64> = s.perm.iter().map(|&i| b[i]).collect();
        // L y = b
        for j in 0..n {
            let (lo, hi) = (s.lp[j], s.lp[j + 1]);
            y[j] /= self.lx[lo];
            let yj = y[j];
            for p in lo + 1..hi {
                y[self.li[p]] -= self.lx[p] * yj;
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let (lo, hi) = (s.lp[j], s.lp[j + 1]);
            let mut v = y[j];
            for p in lo + 1..hi {
                v -= self.lx[p] * y[self.li[p]];
            }
            y[j] = v / self.lx[lo];
        }
        let mut x = vec![0.0; n];
        for (k, &i) in s.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}
