//! Dense linear algebra for verification on small problems.
//!
//! Everything here goes through `nalgebra` and shares no code with the
//! sparse factorizations, so it can serve as an independent reference.

use nalgebra::{DMatrix, DVector};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Largest dimension the dense path accepts.
pub const MAX_DENSE_DIM: usize = 2000;

pub fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidArgument(format!(
            "dense path limited to n <= {MAX_DENSE_DIM}, got {n}"
        )));
    }
    Ok(())
}

/// Solves `A x = b` by dense LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    check_size(a.nrows())?;
    let rhs = DVector::from_column_slice(b);
    a.clone()
        .lu()
        .solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::Singular(0))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_factor(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_size(p.nrows())?;
    p.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        })
}

/// `L⁻¹ A L⁻ᵀ` for a lower triangular `L`.
pub fn congruence(l: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let left = l.solve_lower_triangular(a).expect("nonsingular factor");
    let both = l
        .solve_lower_triangular(&left.transpose())
        .expect("nonsingular factor");
    both.transpose()
}

/// Singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let sym = (a + a.transpose()) * 0.5;
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigenvalues of the symmetric-definite pencil `A x = λ B x`, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = cholesky_factor(b)?;
    Ok(symmetric_eigenvalues(&congruence(&l, a)))
}

/// Numerical rank from the singular values, relative tolerance `rtol`.
pub fn rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    let s = singular_values(a);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > rtol * top).count()
}
