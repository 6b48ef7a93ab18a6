use super::{reverse_cuthill_mckee, CsrMatrix};
use crate::{Error, Result};

/// Envelope (skyline) Cholesky factorization `P A Pᵀ = L Lᵀ` with a reverse
/// Cuthill–McKee permutation `P`.
///
/// Row `i` of `L` is stored densely from its first structural nonzero
/// `first[i]` through the diagonal; the envelope of `L` equals that of the
/// permuted matrix, so no fill escapes the profile.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors the symmetric matrix `a`, reading its lower triangle (after
    /// permutation).
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (i, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let nj = inv[j];
                if nj < first[i] {
                    first[i] = nj;
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        for (i, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let nj = inv[j];
                if nj <= i {
                    values[offsets[i] + nj - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = values.split_at_mut(row_i);
                let lj = &head[offsets[j] + k0 - fj..offsets[j] + j - fj];
                let li = &tail[k0 - fi..j - fi];
                let s: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
                let djj = head[offsets[j] + j - fj];
                tail[j - fi] = (tail[j - fi] - s) / djj;
            }
            let row = &values[row_i..row_i + i - fi];
            let d = values[row_i + i - fi] - row.iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: perm[i],
                    value: d,
                });
            }
            values[row_i + i - fi] = d.sqrt();
        }

        Ok(SkylineCholesky {
            n,
            perm,
            first,
            offsets,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Number of stored entries of `L`.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)` of `L` in permuted numbering.
    pub fn l_entry(&self, i: usize, j: usize) -> f64 {
        if j > i || j < self.first[i] {
            0.0
        } else {
            self.values[self.offsets[i] + j - self.first[i]]
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(a, b)| a * b)
                .sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * yi;
            }
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
    }
}
