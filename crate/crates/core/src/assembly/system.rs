use crate::fespace::{default_degree, DofMap};
use crate::krylov::LinearOperator;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

use super::forms::{
    assemble_coriolis, assemble_div, assemble_scalar_mass, assemble_weighted_vector_mass,
};
use super::TideParams;

/// Strong imposition of `u·n = 0`: boundary RT fluxes are removed from the
/// unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryReduction {
    keep: Vec<usize>,
    full: usize,
}

impl BoundaryReduction {
    pub fn new(v: &DofMap) -> Self {
        BoundaryReduction {
            keep: v.interior_dofs(),
            full: v.ndofs(),
        }
    }

    /// Reduced dimension.
    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full
    }

    /// Full-space indices of the retained unknowns, increasing.
    pub fn kept(&self) -> &[usize] {
        &self.keep
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.keep.iter().map(|&i| full[i]).collect()
    }

    /// Re-embeds a reduced vector with zeros on the boundary.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full];
        for (&i, &v) in self.keep.iter().zip(reduced) {
            out[i] = v;
        }
        out
    }

    pub fn square(&self, a: &CsrMatrix) -> CsrMatrix {
        a.submatrix(&self.keep, &self.keep)
    }

    /// Keeps all rows, drops boundary columns.
    pub fn columns(&self, a: &CsrMatrix) -> CsrMatrix {
        let rows: Vec<usize> = (0..a.nrows()).collect();
        a.submatrix(&rows, &self.keep)
    }
}

/// Removes the rows and columns of boundary RT unknowns from `a`.
pub fn apply_bc(a: &CsrMatrix, v: &DofMap) -> CsrMatrix {
    BoundaryReduction::new(v).square(a)
}

pub(crate) fn quadrature_degree(params: &TideParams, v: &DofMap) -> usize {
    params
        .quad_degree
        .unwrap_or_else(|| default_degree(v.mesh().cell_kind(), params.has_varying_coefficients()))
}

/// The per-step operator
///
/// ```text
/// [ M̌       -s Dᵀ ]      s  = β k / ε²
/// [ s D     s' M  ]      s' = β / ε²
/// ```
///
/// on the velocity unknowns left after boundary elimination and all
/// elevation unknowns.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    params: TideParams,
    reduction: BoundaryReduction,
    mcheck: CsrMatrix,
    mtilde: CsrMatrix,
    div: CsrMatrix,
    mass: CsrMatrix,
    coupling: f64,
    pressure: f64,
}

/// Assembles and reduces the block system for `params`.
pub fn build_system(params: &TideParams, v: &DofMap, w: &DofMap) -> Result<BlockSystem> {
    params.validate()?;
    build_system_unchecked(params, v, w)
}

/// Same as [`build_system`] without parameter validation, so that `k <= 0`
/// (identity and time-reversed steps) can be formed.
pub(crate) fn build_system_unchecked(
    params: &TideParams,
    v: &DofMap,
    w: &DofMap,
) -> Result<BlockSystem> {
    let degree = quadrature_degree(params, v);
    let k = params.half_step;
    let eps = params.rossby;
    let p = params.clone();
    let inv_depth = |x: [f64; 2]| 1.0 / p.depth.eval(x);
    let damped = |x: [f64; 2]| (1.0 + p.drag.eval(x) * k) / p.depth.eval(x);
    let rotation = |x: [f64; 2]| p.coriolis.eval(x) * k / (eps * p.depth.eval(x));

    let mtilde = assemble_weighted_vector_mass(v, &inv_depth, degree)?;
    let mcheck = assemble_weighted_vector_mass(v, &damped, degree)?.linear_combination(
        1.0,
        &assemble_coriolis(v, &rotation, degree)?,
        1.0,
    )?;
    let div = assemble_div(v, w)?;
    let mass = assemble_scalar_mass(w, 1.0)?;

    let reduction = BoundaryReduction::new(v);
    Ok(BlockSystem {
        params: params.clone(),
        mcheck: reduction.square(&mcheck),
        mtilde: reduction.square(&mtilde),
        div: reduction.columns(&div),
        mass,
        coupling: params.coupling_scale(),
        pressure: params.pressure_scale(),
        reduction,
    })
}

impl BlockSystem {
    pub fn params(&self) -> &TideParams {
        &self.params
    }

    pub fn reduction(&self) -> &BoundaryReduction {
        &self.reduction
    }

    /// Reduced `M̌`.
    pub fn mcheck(&self) -> &CsrMatrix {
        &self.mcheck
    }

    /// Reduced `1/H`-weighted velocity mass `M̃`.
    pub fn mtilde(&self) -> &CsrMatrix {
        &self.mtilde
    }

    /// Reduced divergence `D` (elevation rows, velocity columns).
    pub fn div(&self) -> &CsrMatrix {
        &self.div
    }

    /// Unscaled elevation mass `M`.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `β k / ε²`.
    pub fn coupling_scale(&self) -> f64 {
        self.coupling
    }

    /// `β / ε²`.
    pub fn pressure_scale(&self) -> f64 {
        self.pressure
    }

    pub fn nu(&self) -> usize {
        self.mcheck.nrows()
    }

    pub fn neta(&self) -> usize {
        self.mass.nrows()
    }

    /// Copy of the system with `extra` added to the velocity block.
    pub fn with_velocity_term(&self, extra: &CsrMatrix) -> Result<BlockSystem> {
        let mut out = self.clone();
        out.mcheck = self.mcheck.linear_combination(1.0, extra, 1.0)?;
        Ok(out)
    }

    /// Splits a block vector into its velocity and elevation parts.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.nu())
    }

    /// Assembled block matrix.
    pub fn to_csr(&self) -> CsrMatrix {
        let nu = self.nu();
        let n = self.dim();
        let mut t = Vec::with_capacity(self.mcheck.nnz() + 2 * self.div.nnz() + self.neta());
        for i in 0..nu {
            for (j, v) in self.mcheck.row(i) {
                t.push((i, j, v));
            }
        }
        for i in 0..self.neta() {
            for (j, v) in self.div.row(i) {
                t.push((nu + i, j, self.coupling * v));
                t.push((j, nu + i, -self.coupling * v));
            }
            for (j, v) in self.mass.row(i) {
                t.push((nu + i, nu + j, self.pressure * v));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    /// Crank–Nicolson right-hand side for the step from `(u, eta)`.
    ///
    /// `forcing` is the reduced load `(F^{n+1/2}, ψ_i)` and `source` the load
    /// `(G, φ_i)`; both are optional.
    pub fn step_rhs(
        &self,
        u: &[f64],
        eta: &[f64],
        forcing: Option<&[f64]>,
        source: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let (nu, ne) = (self.nu(), self.neta());
        check_len(nu, u.len())?;
        check_len(ne, eta.len())?;
        let mut rhs = vec![0.0; nu + ne];
        let (ru, re) = rhs.split_at_mut(nu);
        // M̌⁻ = 2 M̃ - M̌ flips the sign of every k-dependent term.
        self.mtilde.mul_add_to(2.0, u, ru);
        self.mcheck.mul_add_to(-1.0, u, ru);
        self.div.mul_transpose_add_to(self.coupling, eta, ru);
        if let Some(f) = forcing {
            check_len(nu, f.len())?;
            let dt = 2.0 * self.params.half_step;
            for (r, fi) in ru.iter_mut().zip(f) {
                *r += dt * fi;
            }
        }
        self.mass.mul_add_to(self.pressure, eta, re);
        self.div.mul_add_to(-self.coupling, u, re);
        if let Some(g) = source {
            check_len(ne, g.len())?;
            for (r, gi) in re.iter_mut().zip(g) {
                *r += self.pressure * gi;
            }
        }
        Ok(rhs)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        self.nu() + self.neta()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.nu();
        let (xu, xe) = x.split_at(nu);
        y.fill(0.0);
        let (yu, ye) = y.split_at_mut(nu);
        self.mcheck.mul_add_to(1.0, xu, yu);
        self.div.mul_transpose_add_to(-self.coupling, xe, yu);
        self.div.mul_add_to(self.coupling, xu, ye);
        self.mass.mul_add_to(self.pressure, xe, ye);
    }
}
