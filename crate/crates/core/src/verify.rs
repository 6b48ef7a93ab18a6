//! Dense checks of the preconditioned spectrum on small meshes.
//!
//! With `P = L Lᵀ`, the singular values of `L⁻¹ A L⁻ᵀ` are the inf-sup and
//! continuity constants of the bilinear form in the norm induced by `P`.

use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::{
    assemble_divdiv, assemble_weighted_vector_mass, build_preconditioner, build_system,
    quadrature_degree, BoundaryReduction, PreconditionerKind, TideParams,
};
use crate::dense;
use crate::fespace::{DofMap, FeFamily};
use crate::mesh::{CellKind, Mesh};
use crate::sparse::{dot, CsrMatrix, FactorKind, Factorization};
use crate::{Error, Result};

/// `√3 / 6`, the parameter-free inf-sup lower bound.
pub fn infsup_bound() -> f64 {
    3f64.sqrt() / 6.0
}

/// Upper bound on the singular values for `kind`: `max{2, 1 + k/ε}` for
/// the Riesz map and `(1 + C* k) max{2, 1 + k/ε}` for its damping-free
/// variant. Other preconditioners carry no parameter-robust bound.
pub fn continuity_bound(kind: PreconditionerKind, k: f64, eps: f64, c_star: f64) -> f64 {
    let base = 2f64.max(1.0 + k / eps);
    match kind {
        PreconditionerKind::Riesz => base,
        PreconditionerKind::RieszLite => (1.0 + c_star * k) * base,
        _ => f64::INFINITY,
    }
}

/// Extreme singular values of `L⁻¹ A L⁻ᵀ` where `P = L Lᵀ`.
pub fn preconditioned_svals(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.shape() != p.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            actual: a.nrows(),
        });
    }
    let l = dense::cholesky_factor(p)?;
    let s = dense::singular_values(&dense::congruence(&l, a));
    match (s.last(), s.first()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidArgument("empty operator".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub n: usize,
    pub cell: CellKind,
    pub pc: PreconditionerKind,
    pub k: f64,
    pub eps: f64,
    pub beta: f64,
    pub c: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
}

impl SpectralReport {
    pub fn within_bounds(&self, tol: f64) -> bool {
        self.sigma_min >= self.bound_lo - tol && self.sigma_max <= self.bound_hi + tol
    }

    pub const CSV_HEADER: &'static str = "N,k,eps,beta,C,sigma_min,sigma_max,bound_lo,bound_hi";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            self.eps,
            self.beta,
            self.c,
            self.sigma_min,
            self.sigma_max,
            self.bound_lo,
            self.bound_hi
        )
    }
}

pub fn write_spectral_csv<W: Write>(reports: &[SpectralReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", SpectralReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub(crate) fn spaces(n: usize, cell: CellKind) -> Result<(DofMap, DofMap)> {
    let mesh = Arc::new(Mesh::build_structured(n, cell)?);
    Ok((
        DofMap::new(mesh.clone(), FeFamily::rt_for(cell))?,
        DofMap::new(mesh, FeFamily::Dg0)?,
    ))
}

/// Dense spectrum of the preconditioned tide operator on an `n × n` mesh.
/// Coefficients must be constant.
pub fn spectral_report(
    params: &TideParams,
    n: usize,
    cell: CellKind,
    kind: PreconditionerKind,
) -> Result<SpectralReport> {
    let c = params
        .drag
        .as_constant()
        .ok_or_else(|| Error::InvalidArgument("spectral checks need a constant drag".into()))?;
    let (v, w) = spaces(n, cell)?;
    let sys = build_system(params, &v, &w)?;
    let pc = build_preconditioner(params, &v, &w, kind)?;
    let a = sys.to_csr();
    if a.nrows() > dense::MAX_DENSE_DIM {
        return Err(Error::InvalidArgument(format!(
            "dimension {} exceeds the dense limit",
            a.nrows()
        )));
    }
    let (sigma_min, sigma_max) =
        preconditioned_svals(&dense::to_dense(&a), &dense::to_dense(&pc.to_csr()))?;
    Ok(SpectralReport {
        n,
        cell,
        pc: kind,
        k: params.half_step,
        eps: params.rossby,
        beta: params.burger,
        c,
        sigma_min,
        sigma_max,
        bound_lo: infsup_bound(),
        bound_hi: continuity_bound(kind, params.half_step, params.rossby, c),
    })
}

/// Parameter grid for [`check_bounds_sweep`]; every combination is run.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    pub ns: Vec<usize>,
    pub cells: Vec<CellKind>,
    pub ks: Vec<f64>,
    pub epss: Vec<f64>,
    pub kinds: Vec<PreconditionerKind>,
    pub beta: f64,
    pub c: f64,
    pub f: f64,
}

/// Runs the grid in parallel; reports come back in grid order
/// (cell, N, k, ε, preconditioner, innermost last).
pub fn check_bounds_sweep(grid: &SpectralGrid) -> Result<Vec<SpectralReport>> {
    let mut points = Vec::new();
    for &cell in &grid.cells {
        for &n in &grid.ns {
            for &k in &grid.ks {
                for &eps in &grid.epss {
                    for &kind in &grid.kinds {
                        points.push((cell, n, k, eps, kind));
                    }
                }
            }
        }
    }
    points
        .par_iter()
        .map(|&(cell, n, k, eps, kind)| {
            let params = TideParams::new(k)
                .with_rossby(eps)
                .with_burger(grid.beta)
                .with_drag(grid.c)
                .with_coriolis(grid.f);
            spectral_report(&params, n, cell, kind)
        })
        .collect()
}

/// Extreme eigenvalues `(λ_min, λ_max)` of `P_lite x = λ P_riesz x`.
pub fn norm_equivalence(p_riesz: &CsrMatrix, p_lite: &CsrMatrix) -> Result<(f64, f64)> {
    let e = dense::generalized_eigenvalues(&dense::to_dense(p_lite), &dense::to_dense(p_riesz))?;
    match (e.first(), e.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidArgument("empty operator".into())),
    }
}

/// Reduced velocity block `((1 + C k) u, v)_{1/H} + (k² β/ε²)(div u, div v)`:
/// the damping-weighted Riesz map without the plain mass term.
pub fn damped_riesz_block(params: &TideParams, v: &DofMap) -> Result<CsrMatrix> {
    let degree = quadrature_degree(params, v);
    let k = params.half_step;
    let p = params.clone();
    let m = assemble_weighted_vector_mass(
        v,
        &|x| (1.0 + p.drag.eval(x) * k) / p.depth.eval(x),
        degree,
    )?;
    let dd = assemble_divdiv(v, k * k * params.pressure_scale())?;
    Ok(BoundaryReduction::new(v).square(&m.linear_combination(1.0, &dd, 1.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEstimate {
    pub n: usize,
    pub h: f64,
    /// `max ‖div u‖ / ‖u‖` over the full RT space.
    pub sigma_max: f64,
}

impl InverseEstimate {
    pub fn constant(&self) -> f64 {
        self.h * self.sigma_max
    }
}

fn inverse_pencil(n: usize, cell: CellKind) -> Result<(CsrMatrix, CsrMatrix, f64)> {
    let (v, _) = spaces(n, cell)?;
    let m = assemble_weighted_vector_mass(&v, &|_| 1.0, 2)?;
    let dd = assemble_divdiv(&v, 1.0)?;
    Ok((dd, m, v.mesh().mesh_size()))
}

/// Largest generalized singular value of the divergence in the L² metrics,
/// by dense generalized eigensolve, for each `N`.
pub fn measure_inverse_constant(cell: CellKind, ns: &[usize]) -> Result<Vec<InverseEstimate>> {
    ns.par_iter()
        .map(|&n| {
            let (dd, m, h) = inverse_pencil(n, cell)?;
            let e = dense::generalized_eigenvalues(&dense::to_dense(&dd), &dense::to_dense(&m))?;
            Ok(InverseEstimate {
                n,
                h,
                sigma_max: e.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
            })
        })
        .collect()
}

/// Same quantity by Lanczos in the mass inner product with full
/// reorthogonalization; usable beyond the dense limit.
pub fn estimate_inverse_constant(
    cell: CellKind,
    n: usize,
    steps: usize,
) -> Result<InverseEstimate> {
    let (dd, m, h) = inverse_pencil(n, cell)?;
    let lam = lanczos_max(&dd, &m, steps)?;
    Ok(InverseEstimate {
        n,
        h,
        sigma_max: lam.max(0.0).sqrt(),
    })
}

/// Largest eigenvalue of `K x = λ M x` for symmetric `K` and SPD `M`.
fn lanczos_max(k: &CsrMatrix, m: &CsrMatrix, steps: usize) -> Result<f64> {
    let n = k.nrows();
    let mf = Factorization::new(m, FactorKind::SpdCholesky)?;
    let m_dot = |a: &[f64], b: &[f64]| -> f64 {
        let mut mb = vec![0.0; n];
        m.mul_add_to(1.0, b, &mut mb);
        dot(a, &mb)
    };
    let mut q: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin())
        .collect();
    let s = m_dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= s);
    let mut basis = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..steps.min(n) {
        let mut z = vec![0.0; n];
        k.mul_add_to(1.0, &basis[j], &mut z);
        alpha.push(dot(&basis[j], &z));
        let mut w = mf.solve(&z)?;
        for _ in 0..2 {
            for b in &basis {
                let c = m_dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let bnorm = m_dot(&w, &w).sqrt();
        if bnorm <= 1e-12 * alpha[j].abs().max(1.0) || j + 1 == steps.min(n) {
            break;
        }
        beta.push(bnorm);
        basis.push(w.iter().map(|x| x / bnorm).collect());
    }
    let len = alpha.len();
    let mut t = DMatrix::zeros(len, len);
    for i in 0..len {
        t[(i, i)] = alpha[i];
        if i + 1 < len {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    Ok(dense::symmetric_eigenvalues(&t)
        .last()
        .copied()
        .unwrap_or(0.0))
}
