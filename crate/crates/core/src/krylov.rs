//! Restarted GMRES with left preconditioning.

use crate::sparse::{dot, norm2, CsrMatrix, Factorization};
use crate::{Error, Result};

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Overwrites `y` with the image of `x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.mul_add_to(1.0, x, y);
    }
}

/// The inverse of the factored matrix.
impl LinearOperator for Factorization {
    fn dim(&self) -> usize {
        Factorization::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative tolerance on the preconditioned residual.
    pub rtol: f64,
    pub atol: f64,
    pub restart: usize,
    pub maxit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: 1e-50,
            restart: 100,
            maxit: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol >= 0.0) || self.restart == 0 || self.maxit == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid solver settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Total Arnoldi steps over all restart cycles.
    pub iterations: usize,
    pub converged: bool,
    /// `‖P⁻¹(b - A x)‖ / ‖P⁻¹ b‖` at exit (absolute when `P⁻¹ b = 0`).
    pub residual: f64,
    /// Least-squares residual estimate after each iteration.
    pub history: Vec<f64>,
}

/// Solves `A x = b` by GMRES(m) on the left-preconditioned system
/// `P⁻¹ A x = P⁻¹ b`, starting from `x0` (zero when `None`).
///
/// Converged means `‖P⁻¹(b - A x)‖₂ <= max(rtol ‖P⁻¹ b‖₂, atol)` for the
/// true residual of the returned iterate. Running out of iterations is not an
/// error; the report says `converged = false`.
pub fn gmres<A, P>(
    a: &A,
    pinv: &P,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)>
where
    A: LinearOperator + ?Sized,
    P: LinearOperator + ?Sized,
{
    cfg.validate()?;
    let n = a.dim();
    for len in [pinv.dim(), b.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
            })
        }
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };

    let mut tmp = vec![0.0; n];
    let mut r = vec![0.0; n];
    pinv.apply(b, &mut r);
    let bnorm = norm2(&r);
    let target = (cfg.rtol * bnorm).max(cfg.atol);
    let relative = |res: f64| if bnorm > 0.0 { res / bnorm } else { res };

    let m = cfg.restart.min(n.max(1));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![0.0; (m + 1) * m];
    let hidx = |i: usize, j: usize| j * (m + 1) + i;
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let mut history = Vec::new();

    loop {
        // True preconditioned residual.
        a.apply(&x, &mut tmp);
        for (t, bi) in tmp.iter_mut().zip(b) {
            *t = bi - *t;
        }
        pinv.apply(&tmp, &mut r);
        let beta = norm2(&r);
        if beta <= target || !beta.is_finite() || iterations >= cfg.maxit || n == 0 {
            let converged = beta <= target;
            return Ok((
                x,
                SolveReport {
                    iterations,
                    converged,
                    residual: relative(beta),
                    history,
                },
            ));
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut j = 0;
        while j < m && iterations < cfg.maxit {
            a.apply(&basis[j], &mut tmp);
            pinv.apply(&tmp, &mut w);
            iterations += 1;

            // Modified Gram–Schmidt, then one reorthogonalization sweep.
            for pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    if pass == 0 {
                        h[hidx(i, j)] = c;
                    } else {
                        h[hidx(i, j)] += c;
                    }
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let hnext = norm2(&w);

            for i in 0..j {
                let (a0, a1) = (h[hidx(i, j)], h[hidx(i + 1, j)]);
                h[hidx(i, j)] = cs[i] * a0 + sn[i] * a1;
                h[hidx(i + 1, j)] = -sn[i] * a0 + cs[i] * a1;
            }
            let hjj = h[hidx(j, j)];
            let rho = hjj.hypot(hnext);
            if rho == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hjj / rho;
                sn[j] = hnext / rho;
            }
            h[hidx(j, j)] = rho;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            let estimate = g[j + 1].abs();
            history.push(relative(estimate));
            j += 1;

            if hnext == 0.0 || estimate <= target {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // Back substitution for the least-squares coefficients.
        let mut y = g[..j].to_vec();
        for i in (0..j).rev() {
            let mut s = y[i];
            for l in i + 1..j {
                s -= h[hidx(i, l)] * y[l];
            }
            let d = h[hidx(i, i)];
            y[i] = if d != 0.0 { s / d } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::FactorKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_nonsymmetric(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.random::<f64>()));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        let (x, rep) = gmres(
            &Identity(10),
            &Identity(10),
            &b,
            None,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        for (a, c) in x.iter().zip(&b) {
            assert!((a - c).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let a = random_nonsymmetric(60, 3);
        let f = Factorization::new(&a, FactorKind::GeneralLu).unwrap();
        let b = vec![1.0; 60];
        let (_, rep) = gmres(&a, &f, &b, None, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn restarted_solve_reaches_tolerance() {
        let a = random_nonsymmetric(200, 11);
        let b: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let cfg = SolverConfig {
            restart: 5,
            ..SolverConfig::default()
        };
        let (x, rep) = gmres(&a, &Identity(200), &b, None, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.residual <= cfg.rtol);
        let ax = a.spmv(&x).unwrap();
        let err = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-7 * norm2(&b));
    }

    #[test]
    fn iteration_count_is_scale_invariant() {
        let a = random_nonsymmetric(80, 5);
        let b: Vec<f64> = (0..80).map(|i| (0.3 * i as f64).cos()).collect();
        let cfg = SolverConfig::default();
        let (_, r1) = gmres(&a, &Identity(80), &b, None, &cfg).unwrap();
        let b2: Vec<f64> = b.iter().map(|v| 1e3 * v).collect();
        let (_, r2) = gmres(&a, &Identity(80), &b2, None, &cfg).unwrap();
        assert_eq!(r1.iterations, r2.iterations);
    }

    #[test]
    fn maxit_is_reported_not_raised() {
        let a = random_nonsymmetric(100, 9);
        let b = vec![1.0; 100];
        let cfg = SolverConfig {
            maxit: 2,
            restart: 1,
            ..SolverConfig::default()
        };
        let (_, rep) = gmres(&a, &Identity(100), &b, None, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let a = random_nonsymmetric(10, 1);
        let (x, rep) = gmres(
            &a,
            &Identity(10),
            &[0.0; 10],
            None,
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let a = random_nonsymmetric(4, 1);
        assert!(gmres(&a, &Identity(3), &[0.0; 4], None, &SolverConfig::default()).is_err());
        let cfg = SolverConfig {
            restart: 0,
            ..SolverConfig::default()
        };
        assert!(gmres(&a, &Identity(4), &[0.0; 4], None, &cfg).is_err());
    }
}
