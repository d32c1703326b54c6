//! Small dense, banded, and sparse linear-algebra kernels.
//!
//! Everything here is sized for spectral-element work: dense matrices up to a
//! few hundred rows (basis tables, modal transforms), a symmetric tridiagonal
//! eigensolver for Gauss-quadrature Jacobi matrices, and a banded LU with
//! partial pivoting (plus reverse Cuthill-McKee ordering) for the steady
//! global solves.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("eigenvalue iteration failed to converge for index {0}")]
    EigenNoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
    }

    /// C = A B
    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.ncols, other.nrows);
        let mut c = DMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let crow = c.row_mut(i);
                for j in 0..other.ncols {
                    crow[j] += a * brow[j];
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> DMat {
        DMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// LU factorization with partial pivoting of a square dense matrix.
pub struct DenseLu {
    lu: DMat,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: DMat) -> Result<Self, LinalgError> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular(k));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / pivot;
                a[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= l * a[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu: a, piv })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        // Row swaps were applied to whole rows during factorization (stored
        // multipliers included), so permute b fully before substituting.
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for k in 0..n {
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..n {
                    b[i] -= self.lu[(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.lu[(k, k)];
            let bk = b[k];
            if bk != 0.0 {
                for i in 0..k {
                    b[i] -= self.lu[(i, k)] * bk;
                }
            }
        }
    }

    /// Inverse assembled column by column.
    pub fn inverse(&self) -> DMat {
        let n = self.lu.nrows;
        let mut inv = DMat::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.solve(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method.
///
/// `diag` holds the n diagonal entries, `off` the n-1 sub-diagonal entries.
/// Returns the eigenvalues sorted ascending.
pub fn sym_tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible off-diagonal entry to split at.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::EigenNoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for &(i, j, v) in triplets.iter() {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Self { n, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.indptr[i]..self.indptr[i + 1] {
            if self.indices[k] == j {
                return self.values[k];
            }
        }
        0.0
    }

    /// max_{ij} |A_ij - A_ji|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn bandwidth(&self) -> usize {
        let mut b = 0usize;
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                b = b.max(self.indices[k].abs_diff(i));
            }
        }
        b
    }

    /// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
    pub fn rcm_ordering(&self) -> Vec<usize> {
        let n = self.n;
        let degree: Vec<usize> = (0..n).map(|i| self.indptr[i + 1] - self.indptr[i]).collect();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = std::collections::VecDeque::new();
        let mut nbrs: Vec<usize> = Vec::new();
        loop {
            let start = match (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]) {
                Some(s) => s,
                None => break,
            };
            visited[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                nbrs.clear();
                for k in self.indptr[u]..self.indptr[u + 1] {
                    let v = self.indices[k];
                    if v != u && !visited[v] {
                        visited[v] = true;
                        nbrs.push(v);
                    }
                }
                nbrs.sort_unstable_by_key(|&v| degree[v]);
                for &v in &nbrs {
                    queue.push_back(v);
                }
            }
        }
        order.reverse();
        order
    }

    /// Symmetric permutation: B[new_i][new_j] = A[perm[new_i]][perm[new_j]].
    pub fn permute(&self, perm: &[usize]) -> CsrMatrix {
        let n = self.n;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                trip.push((inv[i], inv[self.indices[k]], self.values[k]));
            }
        }
        CsrMatrix::from_triplets(n, &mut trip)
    }
}

/// Banded LU factorization with partial pivoting (LAPACK `gbtrf` layout).
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Stored with `ldab = 2*kl + ku + 1` rows; entry (i, j) of the matrix
    /// lives at `ab[(kl + ku + i - j) * n + j]`.
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn factor_csr(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let n = a.n;
        let b = a.bandwidth();
        let (kl, ku) = (b, b);
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        let at = |i: usize, j: usize| (kl + ku + i - j) * n + j;
        for i in 0..n {
            for k in a.indptr[i]..a.indptr[i + 1] {
                ab[at(i, a.indices[k])] = a.values[k];
            }
        }
        let mut piv = vec![0usize; n];
        let kv = kl + ku; // rows of fill above the diagonal in band storage
        for j in 0..n {
            // pivot search within the column band
            let imax = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = ab[(kv + 0) * n + j].abs();
            for i in j + 1..=imax {
                let v = ab[(kv + i - j) * n + j].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular(j));
            }
            piv[j] = p;
            let jmax = (j + kv).min(n - 1);
            if p != j {
                for c in j..=jmax {
                    let ia = (kv + j - c) * n + c;
                    let ib = (kv + p - c) * n + c;
                    ab.swap(ia, ib);
                }
            }
            let pivot = ab[kv * n + j];
            for i in j + 1..=imax {
                let idx = (kv + i - j) * n + j;
                let l = ab[idx] / pivot;
                ab[idx] = l;
                if l != 0.0 {
                    for c in j + 1..=jmax {
                        ab[(kv + i - c) * n + c] -= l * ab[(kv + j - c) * n + c];
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, ab, piv })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        assert_eq!(b.len(), n);
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            if bj != 0.0 {
                let imax = (j + self.kl).min(n - 1);
                for i in j + 1..=imax {
                    b[i] -= self.ab[(kv + i - j) * n + j] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let jt = j.saturating_sub(kv);
            b[j] /= self.ab[kv * n + j];
            let bj = b[j];
            if bj != 0.0 {
                for i in jt..j {
                    b[i] -= self.ab[(kv + i - j) * n + j] * bj;
                }
            }
        }
    }
}
