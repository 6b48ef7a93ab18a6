use super::{bandwidth, reverse_cuthill_mckee, CsrMatrix};
use crate::{Error, Result};

/// Banded LU factorization with partial pivoting, `P_r Q A Qᵀ = L U`, where
/// `Q` is a reverse Cuthill–McKee ordering of the symmetrized pattern.
///
/// Storage follows the LAPACK general-band layout: column `j` holds rows
/// `j - ku - kl ..= j + kl`, the extra `kl` superdiagonals receiving the fill
/// caused by row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    perm: Vec<usize>,
    pivots: Vec<usize>,
    ab: Vec<f64>,
}

impl BandLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let b = a.permute_symmetric(&perm);
        let (kl, ku) = bandwidth(&b);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            ld,
            perm,
            pivots: vec![0; n],
            ab: vec![0.0; ld * n],
        };
        for i in 0..n {
            for (j, v) in b.row(i) {
                lu.ab[j * ld + kv + i - j] = v;
            }
        }
        lu.factor()?;
        Ok(lu)
    }

    fn at(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * self.ld + kv;
            let mut jp = 0;
            let mut best = self.ab[col].abs();
            for r in 1..=km {
                let v = self.ab[col + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            self.pivots[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (p, q) = (self.at(j, c), self.at(j + jp, c));
                    self.ab.swap(p, q);
                }
            }
            let piv = self.ab[col];
            for r in 1..=km {
                self.ab[col + r] /= piv;
            }
            for c in j + 1..=ju {
                let t = self.ab[self.at(j, c)];
                if t == 0.0 {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[col + r];
                    let idx = self.at(j + r, c);
                    self.ab[idx] -= l * t;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                y.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let col = j * self.ld + self.kl + self.ku;
            let yj = y[j];
            for r in 1..=km {
                y[j + r] -= self.ab[col + r] * yj;
            }
        }
        let width = self.kl + self.ku;
        for j in (0..n).rev() {
            let mut s = y[j];
            for c in j + 1..=(j + width).min(n.saturating_sub(1)) {
                s -= self.ab[self.at(j, c)] * y[c];
            }
            y[j] = s / self.ab[self.at(j, j)];
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row interchange.
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let f = BandLu::new(&a).unwrap();
        let mut x = vec![3.0, 5.0];
        f.solve_in_place(&mut x);
        assert!((x[0] - 5.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn nonsymmetric_banded_system() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 0.1 + (i % 3) as f64));
            if i + 1 < n {
                t.push((i, i + 1, 2.0));
                t.push((i + 1, i, -1.5));
            }
            if i + 3 < n {
                t.push((i + 3, i, 0.7));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let f = BandLu::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let r = a.spmv(&x).unwrap();
        let err = r
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)]);
        assert!(matches!(BandLu::new(&a), Err(Error::Singular(_))));
    }
}
