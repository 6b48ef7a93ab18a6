use std::fmt;
use std::str::FromStr;

use crate::fespace::DofMap;
use crate::krylov::LinearOperator;
use crate::sparse::{CsrMatrix, FactorKind, Factorization};
use crate::{Error, Result};

use super::forms::{assemble_divdiv, assemble_scalar_mass, assemble_weighted_vector_mass};
use super::system::{quadrature_degree, BoundaryReduction};
use super::TideParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    /// `diag(M̃, (β/ε²) M)`.
    MassDiag,
    /// Weighted Riesz map including damping and the plain velocity mass.
    Riesz,
    /// Riesz map with the damping term dropped.
    RieszLite,
    None,
}

impl PreconditionerKind {
    pub fn name(self) -> &'static str {
        match self {
            PreconditionerKind::MassDiag => "mass",
            PreconditionerKind::Riesz => "riesz",
            PreconditionerKind::RieszLite => "riesz-lite",
            PreconditionerKind::None => "none",
        }
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mass" | "massdiag" | "mass-diag" => Ok(PreconditionerKind::MassDiag),
            "riesz" => Ok(PreconditionerKind::Riesz),
            "riesz-lite" | "rieszlite" | "lite" => Ok(PreconditionerKind::RieszLite),
            "none" => Ok(PreconditionerKind::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown preconditioner '{other}'"
            ))),
        }
    }
}

/// Block-diagonal preconditioner `P = diag(P_V, P_W)` with a factored
/// velocity block and a diagonal elevation block.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: PreconditionerKind,
    pv: CsrMatrix,
    pw: Vec<f64>,
    factor: Factorization,
}

/// Unreduced velocity block of the chosen preconditioner.
pub fn assemble_velocity_block(
    params: &TideParams,
    v: &DofMap,
    kind: PreconditionerKind,
) -> Result<CsrMatrix> {
    let degree = quadrature_degree(params, v);
    let k = params.half_step;
    let p = params.clone();
    let inv_depth = |x: [f64; 2]| 1.0 / p.depth.eval(x);
    let damped = |x: [f64; 2]| (1.0 + p.drag.eval(x) * k) / p.depth.eval(x);
    let divdiv_scale = k * k * params.pressure_scale();
    match kind {
        PreconditionerKind::MassDiag => assemble_weighted_vector_mass(v, &inv_depth, degree),
        PreconditionerKind::Riesz => {
            let plain = assemble_weighted_vector_mass(v, &|_| 1.0, degree)?;
            assemble_weighted_vector_mass(v, &damped, degree)?
                .linear_combination(1.0, &plain, 1.0)?
                .linear_combination(1.0, &assemble_divdiv(v, divdiv_scale)?, 1.0)
        }
        PreconditionerKind::RieszLite => assemble_weighted_vector_mass(v, &inv_depth, degree)?
            .linear_combination(1.0, &assemble_divdiv(v, divdiv_scale)?, 1.0),
        PreconditionerKind::None => Ok(CsrMatrix::identity(v.ndofs())),
    }
}

/// Assembles, reduces and factors the preconditioner blocks.
pub fn build_preconditioner(
    params: &TideParams,
    v: &DofMap,
    w: &DofMap,
    kind: PreconditionerKind,
) -> Result<Preconditioner> {
    params.validate()?;
    let reduction = BoundaryReduction::new(v);
    let pv = reduction.square(&assemble_velocity_block(params, v, kind)?);
    let pw = match kind {
        PreconditionerKind::None => vec![1.0; w.ndofs()],
        _ => assemble_scalar_mass(w, params.pressure_scale())?.diagonal(),
    };
    Preconditioner::from_blocks(kind, pv, pw)
}

impl Preconditioner {
    /// Factors a reduced velocity block `pv`; `pw` is the diagonal of the
    /// elevation block.
    pub fn from_blocks(kind: PreconditionerKind, pv: CsrMatrix, pw: Vec<f64>) -> Result<Self> {
        if let Some((i, &d)) = pw.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(Error::NotPositiveDefinite { pivot: i, value: d });
        }
        let factor = Factorization::new(&pv, FactorKind::SpdCholesky)?;
        Ok(Preconditioner {
            kind,
            pv,
            pw,
            factor,
        })
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    /// Reduced velocity block.
    pub fn pv(&self) -> &CsrMatrix {
        &self.pv
    }

    /// Elevation block.
    pub fn pw(&self) -> CsrMatrix {
        CsrMatrix::from_diagonal(&self.pw)
    }

    pub fn pw_diagonal(&self) -> &[f64] {
        &self.pw
    }

    /// Assembled `diag(P_V, P_W)`.
    pub fn to_csr(&self) -> CsrMatrix {
        let nu = self.pv.nrows();
        let n = nu + self.pw.len();
        let mut t = Vec::with_capacity(self.pv.nnz() + self.pw.len());
        for i in 0..nu {
            t.extend(self.pv.row(i).map(|(j, v)| (i, j, v)));
        }
        t.extend(
            self.pw
                .iter()
                .enumerate()
                .map(|(i, &d)| (nu + i, nu + i, d)),
        );
        CsrMatrix::from_triplets(n, n, &t)
    }
}

/// Applies `P⁻¹`.
impl LinearOperator for Preconditioner {
    fn dim(&self) -> usize {
        self.pv.nrows() + self.pw.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.pv.nrows();
        y.copy_from_slice(x);
        let (yu, ye) = y.split_at_mut(nu);
        self.factor.solve_in_place(yu);
        for (yi, d) in ye.iter_mut().zip(&self.pw) {
            *yi /= d;
        }
    }
}
