//! Compressed sparse row matrices and direct factorizations.

mod cholesky;
mod lu;
mod ordering;

use std::io::{self, Write};

pub use cholesky::SkylineCholesky;
pub use lu::BandLu;
pub use ordering::{bandwidth, reverse_cuthill_mckee};

use crate::{Error, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in &row {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: diag.to_vec(),
        }
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

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.mul_add_to(1.0, x, &mut y);
        Ok(y)
    }

    /// `y += alpha * A x`. Panics on dimension mismatch.
    pub fn mul_add_to(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi += alpha * s;
        }
    }

    /// `y += alpha * Aᵀ x`. Panics on dimension mismatch.
    pub fn mul_transpose_add_to(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for (i, xi) in x.iter().enumerate() {
            let a = alpha * xi;
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.data[k] * a;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &trips)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                actual: other.nrows * other.ncols,
            });
        }
        let mut trips = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            trips.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            trips.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        Ok(Self::from_triplets(self.nrows, self.ncols, &trips))
    }

    /// Rows `rows` and columns `cols` of `self`, renumbered in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut trips = Vec::new();
        for (ni, &oi) in rows.iter().enumerate() {
            for (j, v) in self.row(oi) {
                if col_map[j] != usize::MAX {
                    trips.push((ni, col_map[j], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), &trips)
    }

    /// Symmetric permutation `B[i][j] = A[perm[i]][perm[j]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        self.submatrix(perm, perm)
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Writes the matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    SpdCholesky,
    GeneralLu,
}

/// Reusable direct factorization with a reverse Cuthill–McKee ordering.
#[derive(Debug, Clone)]
pub enum Factorization {
    Cholesky(SkylineCholesky),
    Lu(BandLu),
}

impl Factorization {
    pub fn new(a: &CsrMatrix, kind: FactorKind) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(match kind {
            FactorKind::SpdCholesky => Factorization::Cholesky(SkylineCholesky::new(a)?),
            FactorKind::GeneralLu => Factorization::Lu(BandLu::new(a)?),
        })
    }

    pub fn kind(&self) -> FactorKind {
        match self {
            Factorization::Cholesky(_) => FactorKind::SpdCholesky,
            Factorization::Lu(_) => FactorKind::GeneralLu,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factorization::Cholesky(f) => f.dim(),
            Factorization::Lu(f) => f.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Factorization::Cholesky(f) => f.solve_in_place(x),
            Factorization::Lu(f) => f.solve_in_place(x),
        }
    }
}

pub fn factorize(a: &CsrMatrix, kind: FactorKind) -> Result<Factorization> {
    Factorization::new(a, kind)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
        let mut d = vec![vec![0.0; a.ncols()]; a.nrows()];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in a.row(i) {
                row[j] = v;
            }
        }
        d.iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn pseudo_random_matrix(n: usize, seed: u64) -> CsrMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if next() < 0.2 {
                    trips.push((i, j, next() - 0.5));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &trips)
    }

    #[test]
    fn identity_and_diagonal_products() {
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        assert_eq!(CsrMatrix::identity(7).spmv(&x).unwrap(), x);
        let d = CsrMatrix::from_diagonal(&[2.0; 5]).spmv(&[1.0; 5]).unwrap();
        assert_eq!(d, vec![2.0; 5]);
    }

    #[test]
    fn spmv_matches_dense_product() {
        let a = pseudo_random_matrix(20, 7);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = a.spmv(&x).unwrap();
        for (u, v) in y.iter().zip(dense_mul(&a, &x)) {
            assert!((u - v).abs() <= 1e-14);
        }
    }

    #[test]
    fn spmv_rejects_bad_dimension() {
        let a = CsrMatrix::identity(3);
        assert_eq!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn duplicates_are_summed_and_columns_sorted() {
        let a =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 1.0)]);
        assert_eq!(a.indices(), &[0, 2, 1]);
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn transpose_and_submatrix() {
        let a = pseudo_random_matrix(9, 3);
        let t = a.transpose();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(a.get(i, j), t.get(j, i));
            }
        }
        let s = a.submatrix(&[4, 1], &[0, 8, 2]);
        assert_eq!(s.get(0, 1), a.get(4, 8));
        assert_eq!(s.get(1, 2), a.get(1, 2));
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        CsrMatrix::from_diagonal(&[1.5, 2.0])
            .write_matrix_market(&mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 2");
        assert_eq!(lines[2], "1 1 1.5e0");
    }

    #[test]
    fn identity_and_diagonal_factorizations() {
        let b = vec![1.0, -2.0, 3.5];
        for kind in [FactorKind::SpdCholesky, FactorKind::GeneralLu] {
            let f = factorize(&CsrMatrix::identity(3), kind).unwrap();
            assert_eq!(f.solve(&b).unwrap(), b);
            let f = factorize(&CsrMatrix::from_diagonal(&[4.0; 3]), kind).unwrap();
            let x = f.solve(&b).unwrap();
            for (xi, bi) in x.iter().zip(&b) {
                assert!((xi - bi / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_matrix_factors() {
        let a = CsrMatrix::zeros(0, 0);
        let f = factorize(&a, FactorKind::SpdCholesky).unwrap();
        assert!(f.solve(&[]).unwrap().is_empty());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn spmv_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let a = pseudo_random_matrix(15, seed);
            let x: Vec<f64> = (0..15).map(|i| ((i as u64 + seed) as f64).cos()).collect();
            let y: Vec<f64> = (0..15).map(|i| ((i as u64 * 3 + seed) as f64).sin()).collect();
            let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = a.spmv(&comb).unwrap();
            let ax = a.spmv(&x).unwrap();
            let ay = a.spmv(&y).unwrap();
            for i in 0..15 {
                prop_assert!((lhs[i] - (alpha * ax[i] + beta * ay[i])).abs() < 1e-13);
            }
        }
    }
}
