//! Sparse `L D L^T` factorization without pivoting (up-looking, driven by
//! the elimination tree), plus an AMD fill-reducing ordering.
//!
//! There is no numerical pivoting: the caller supplies an ordering under
//! which every leading principal submatrix is nonsingular.

use thiserror::Error;

use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdlError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("permutation is not a bijection on 0..{0}")]
    InvalidPermutation(usize),
    #[error("exact zero pivot at elimination step {0}")]
    ZeroPivot(usize),
    #[error("fill-reducing ordering failed")]
    Ordering,
}

const NONE: usize = usize::MAX;

/// `P A P^T = L D L^T` with unit lower-triangular `L` in compressed columns.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factors a symmetric matrix given with its full pattern (both
    /// triangles); only the upper triangle of `P A P^T` is read.
    pub fn factor(a: &SparseMatrix, perm: &[usize]) -> Result<Self, LdlError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LdlError::NotSquare(n, a.ncols()));
        }
        let iperm = invert(perm, n)?;

        // Upper triangle of the permuted matrix, compressed by column.
        let mut col_count = vec![0usize; n + 1];
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (iperm[i], iperm[j]);
            if pi <= pj {
                col_count[pj + 1] += 1;
            }
        }
        for j in 0..n {
            col_count[j + 1] += col_count[j];
        }
        let ap = col_count.clone();
        let mut next = col_count;
        let mut ai = vec![0; ap[n]];
        let mut ax = vec![0.0; ap[n]];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (iperm[i], iperm[j]);
            if pi <= pj {
                ai[next[pj]] = pi;
                ax[next[pj]] = v;
                next[pj] += 1;
            }
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }

        // Numeric factorization, one row of L at a time.
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut y_vals = vec![0.0; n];
        let mut y_marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_in_col = lp[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0;
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    d[k] += ax[p];
                    continue;
                }
                y_vals[b] += ax[p];
                if !y_marked[b] {
                    y_marked[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut nx = etree[b];
                    while nx != NONE && nx < k {
                        if y_marked[nx] {
                            break;
                        }
                        y_marked[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let end = next_in_col[c];
                let yc = y_vals[c];
                for q in lp[c]..end {
                    y_vals[li[q]] -= lx[q] * yc;
                }
                li[end] = k;
                let l = yc * dinv[c];
                lx[end] = l;
                d[k] -= yc * l;
                next_in_col[c] += 1;
                y_vals[c] = 0.0;
                y_marked[c] = false;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(LdlError::ZeroPivot(k));
            }
            dinv[k] = 1.0 / d[k];
        }

        Ok(Self {
            n,
            perm: perm.to_vec(),
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Pivots in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Ordering used, `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// `min |d_k| / max |d_k|`.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = self.d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
            (lo.min(v.abs()), hi.max(v.abs()))
        });
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..self.n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

fn invert(perm: &[usize], n: usize) -> Result<Vec<usize>, LdlError> {
    if perm.len() != n {
        return Err(LdlError::InvalidPermutation(n));
    }
    let mut inv = vec![NONE; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || inv[old] != NONE {
            return Err(LdlError::InvalidPermutation(n));
        }
        inv[old] = new;
    }
    Ok(inv)
}

/// Approximate minimum degree ordering of the pattern of `a + a^T`,
/// returned as `perm[new] = old`.
pub fn amd_order(a: &SparseMatrix) -> Result<Vec<usize>, LdlError> {
    let n = a.nrows();
    // The pattern is symmetric, so CSR of `a` is CSC of `a^T`, which AMD
    // symmetrizes anyway.
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::with_capacity(a.nnz());
    ap.push(0);
    for i in 0..n {
        ai.extend(a.row(i).map(|(j, _)| j));
        ap.push(ai.len());
    }
    let (p, _, _) = amd::order(n, &ap, &ai, &amd::Control::default()).map_err(|_| LdlError::Ordering)?;
    Ok(p)
}
