//! Compressed sparse row matrices over `C64`.
//!
//! Only what the simulator needs: assembly from triplets, Kronecker products,
//! linear combinations, products, and the sparse-times-dense kernels used by
//! the master-equation right-hand side.

use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2};
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut out = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            if v != C64::new(0.0, 0.0) {
                out.indices.push(i);
                out.data.push(v);
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    /// Builds a matrix from `(row, col, value)` entries. Duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut out = Self::zeros(nrows, ncols);
        let mut it = entries.into_iter().peekable();
        for row in 0..nrows {
            while let Some(&(r, c, v)) = it.peek() {
                if r != row {
                    break;
                }
                assert!(c < ncols, "column {c} out of bounds ({ncols})");
                it.next();
                let mut acc = v;
                while let Some(&(r2, c2, v2)) = it.peek() {
                    if r2 == r && c2 == c {
                        acc += v2;
                        it.next();
                    } else {
                        break;
                    }
                }
                if acc != C64::new(0.0, 0.0) {
                    out.indices.push(c);
                    out.data.push(acc);
                }
            }
            out.indptr[row + 1] = out.indices.len();
        }
        assert!(it.next().is_none(), "row index out of bounds ({nrows})");
        out
    }

    /// Converts a dense matrix, dropping entries with modulus `<= drop_tol`.
    pub fn from_dense(m: ArrayView2<'_, C64>, drop_tol: f64) -> Self {
        let (nrows, ncols) = m.dim();
        let mut out = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                let v = m[[i, j]];
                if v.norm() > drop_tol {
                    out.indices.push(j);
                    out.data.push(v);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Iterates `(col, value)` over the stored entries of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.data[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Storage position of entry `(i, j)`, if it is stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].binary_search(&j).ok().map(|k| range.start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.data[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.triplets() {
            out[[i, j]] = v;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    pub fn transpose(&self) -> Self {
        let entries = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    pub fn adjoint(&self) -> Self {
        let entries = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    pub fn conj(&self) -> Self {
        self.map_values(|v| v.conj())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: C64, other: &Self, b: C64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "axpby shape mismatch");
        let mut out = Self::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (mut p, pe) = (self.indptr[i], self.indptr[i + 1]);
            let (mut q, qe) = (other.indptr[i], other.indptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.indices[p] } else { usize::MAX };
                let cq = if q < qe { other.indices[q] } else { usize::MAX };
                let (col, v) = if cp == cq {
                    let v = a * self.data[p] + b * other.data[q];
                    p += 1;
                    q += 1;
                    (cp, v)
                } else if cp < cq {
                    p += 1;
                    (cp, a * self.data[p - 1])
                } else {
                    q += 1;
                    (cq, b * other.data[q - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    out.indices.push(col);
                    out.data.push(v);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let mut out = Self::zeros(self.nrows, other.ncols);
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = C64::new(0.0, 0.0);
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if acc[j] != C64::new(0.0, 0.0) {
                    out.indices.push(j);
                    out.data.push(acc[j]);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let mut out = Self::zeros(nrows, ncols);
        out.indices.reserve(self.nnz() * other.nnz());
        out.data.reserve(self.nnz() * other.nnz());
        for i in 0..self.nrows {
            for k in 0..other.nrows {
                for (j, a) in self.row(i) {
                    for (l, b) in other.row(k) {
                        out.indices.push(j * other.ncols + l);
                        out.data.push(a * b);
                    }
                }
                out.indptr[i * other.nrows + k + 1] = out.indices.len();
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &Array1<C64>) -> Array1<C64> {
        assert_eq!(self.ncols, x.len(), "mul_vec shape mismatch");
        Array1::from_iter((0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()))
    }

    /// `out += alpha * self * m` for a dense row-major `m`.
    pub fn mul_dense_into(&self, alpha: C64, m: ArrayView2<'_, C64>, mut out: ArrayViewMut2<'_, C64>) {
        assert_eq!(self.ncols, m.nrows(), "mul_dense shape mismatch");
        assert_eq!((self.nrows, m.ncols()), out.dim(), "mul_dense output shape mismatch");
        for i in 0..self.nrows {
            let mut orow = out.row_mut(i);
            for (k, v) in self.row(i) {
                let s = alpha * v;
                let mrow = m.row(k);
                match (orow.as_slice_mut(), mrow.as_slice()) {
                    (Some(o), Some(r)) => o.iter_mut().zip(r).for_each(|(o, r)| *o += s * r),
                    _ => orow.zip_mut_with(&mrow, |o, r| *o += s * r),
                }
            }
        }
    }

    pub fn mul_dense(&self, m: ArrayView2<'_, C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, m.ncols()));
        self.mul_dense_into(C64::new(1.0, 0.0), m, out.view_mut());
        out
    }

    /// `out += alpha * m * self` for a dense `m`.
    pub fn dense_mul_into(&self, alpha: C64, m: ArrayView2<'_, C64>, mut out: ArrayViewMut2<'_, C64>) {
        assert_eq!(m.ncols(), self.nrows, "dense_mul shape mismatch");
        assert_eq!((m.nrows(), self.ncols), out.dim(), "dense_mul output shape mismatch");
        for r in 0..m.nrows() {
            let mrow = m.row(r);
            let mut orow = out.row_mut(r);
            for (k, &mk) in mrow.iter().enumerate() {
                if mk == C64::new(0.0, 0.0) {
                    continue;
                }
                let s = alpha * mk;
                for (j, v) in self.row(k) {
                    orow[j] += s * v;
                }
            }
        }
    }

    /// Dense-times-sparse product `m * self`.
    pub fn dense_mul(&self, m: ArrayView2<'_, C64>) -> Array2<C64> {
        let mut out = Array2::zeros((m.nrows(), self.ncols));
        self.dense_mul_into(C64::new(1.0, 0.0), m, out.view_mut());
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self - self^dagger`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.axpby(C64::new(1.0, 0.0), &self.adjoint(), C64::new(-1.0, 0.0)).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1.0)), (1, 0, c(-1.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0));
    }

    #[test]
    fn kron_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (1, 1, c(2.0))]);
        let b = CsrMatrix::from_triplets(2, 2, vec![(0, 0, c(3.0)), (1, 0, C64::new(0.0, 1.0))]);
        let k = a.kron(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k[[i, j]], ad[[i / 2, j / 2]] * bd[[i % 2, j % 2]]);
            }
        }
    }

    #[test]
    fn products_match_dense() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 1, c(1.0)), (1, 2, C64::new(0.5, 2.0)), (2, 0, c(-1.0))]);
        let b = CsrMatrix::from_triplets(3, 3, vec![(0, 0, c(2.0)), (1, 2, c(1.0)), (2, 1, C64::new(0.0, -1.0))]);
        let (ad, bd) = (a.to_dense(), b.to_dense());
        assert_eq!(a.matmul(&b).to_dense(), ad.dot(&bd));
        assert_eq!(a.mul_dense(bd.view()), ad.dot(&bd));
        assert_eq!(b.dense_mul(ad.view()), ad.dot(&bd));
        assert_eq!(a.adjoint().to_dense(), ad.t().mapv(|v| v.conj()));
        let s = a.axpby(c(2.0), &b, C64::new(0.0, 1.0)).to_dense();
        assert_eq!(s, ad.mapv(|v| v * 2.0) + bd.mapv(|v| v * C64::new(0.0, 1.0)));
    }
}
