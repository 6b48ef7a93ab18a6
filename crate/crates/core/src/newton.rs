//! Newton's method for the per-step problem with a nonlinear damping law
//! `g(u)` in place of the linear drag `C u`.

use crate::assembly::{
    assemble_divdiv, assemble_tensor_mass, assemble_weighted_vector_mass, build_system,
    quadrature_degree, BlockSystem, BoundaryReduction, Preconditioner, PreconditionerKind,
    TideParams,
};
use crate::fespace::{quad_rule, BasisTable, DofMap};
use crate::krylov::{gmres, LinearOperator, SolverConfig};
use crate::sparse::{norm2, CsrMatrix};
use crate::stepper::State;
use crate::{Error, Result};

/// Monotone damping law `g: R² -> R²` and its derivative.
pub trait DampingLaw: Sync {
    fn g(&self, u: [f64; 2]) -> [f64; 2];
    fn g_prime(&self, u: [f64; 2]) -> [[f64; 2]; 2];
}

/// `g(u) = |u|² u`, `g'(u) = |u|² I + 2 u uᵀ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cubic;

impl DampingLaw for Cubic {
    fn g(&self, u: [f64; 2]) -> [f64; 2] {
        let s = u[0] * u[0] + u[1] * u[1];
        [s * u[0], s * u[1]]
    }

    fn g_prime(&self, u: [f64; 2]) -> [[f64; 2]; 2] {
        let s = u[0] * u[0] + u[1] * u[1];
        [
            [s + 2.0 * u[0] * u[0], 2.0 * u[0] * u[1]],
            [2.0 * u[1] * u[0], s + 2.0 * u[1] * u[1]],
        ]
    }
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDamping;

impl DampingLaw for NoDamping {
    fn g(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn g_prime(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// `g(u) = c u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearDrag(pub f64);

impl DampingLaw for LinearDrag {
    fn g(&self, u: [f64; 2]) -> [f64; 2] {
        [self.0 * u[0], self.0 * u[1]]
    }

    fn g_prime(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[self.0, 0.0], [0.0, self.0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub atol: f64,
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            atol: 1e-10,
            rtol: 1e-8,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// GMRES iterations of each Newton step.
    pub linear_iterations: Vec<usize>,
    /// `‖F‖₂` before the first step and after each step.
    pub residual_norms: Vec<f64>,
}

/// `F(x) = A₀ x - b + σ (g(w)/H, v)` where `A₀` is the undamped block
/// operator and `w` is either the unknown velocity (steady problem) or the
/// midpoint `(u + u_n)/2` (Crank–Nicolson step, `σ = 2k`).
pub struct NonlinearProblem<'a> {
    params: TideParams,
    v: &'a DofMap,
    law: &'a dyn DampingLaw,
    base: BlockSystem,
    rhs: Vec<f64>,
    anchor: Option<Vec<f64>>,
    reduction: BoundaryReduction,
    degree: usize,
    tables: Vec<BasisTable>,
    inv_depth: Vec<f64>,
    riesz_fixed: CsrMatrix,
    lite: CsrMatrix,
}

impl<'a> NonlinearProblem<'a> {
    /// Steady problem `A₀ x + (k/H)(g(u), v) = rhs`.
    pub fn steady(
        params: &TideParams,
        v: &'a DofMap,
        w: &'a DofMap,
        law: &'a dyn DampingLaw,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        Self::new(params, v, w, law, Some(rhs), None)
    }

    /// One Crank–Nicolson step from `state` with the damping evaluated at the
    /// midpoint.
    pub fn cn_step(
        params: &TideParams,
        v: &'a DofMap,
        w: &'a DofMap,
        law: &'a dyn DampingLaw,
        state: &State,
    ) -> Result<Self> {
        Self::new(params, v, w, law, None, Some(state))
    }

    fn new(
        params: &TideParams,
        v: &'a DofMap,
        w: &'a DofMap,
        law: &'a dyn DampingLaw,
        rhs: Option<Vec<f64>>,
        state: Option<&State>,
    ) -> Result<Self> {
        let params = params.clone().with_drag(0.0);
        let base = build_system(&params, v, w)?;
        let reduction = BoundaryReduction::new(v);
        let (rhs, anchor) = match (rhs, state) {
            (Some(r), _) => (r, None),
            (None, Some(s)) => (
                base.step_rhs(&s.u, &s.eta, None, None)?,
                Some(reduction.extend(&s.u)),
            ),
            (None, None) => unreachable!(),
        };
        if rhs.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                actual: rhs.len(),
            });
        }
        // The damping integrand is quartic in the basis.
        let degree = params
            .quad_degree
            .unwrap_or(4)
            .max(quadrature_degree(&params, v));
        let rule = quad_rule(v.mesh().cell_kind(), degree)?;
        let tables = (0..v.mesh().num_cells())
            .map(|c| v.tabulate(c, &rule))
            .collect::<Result<Vec<_>>>()?;
        let inv_depth = tables
            .iter()
            .flat_map(|t| t.points.iter().map(|&x| 1.0 / params.depth.eval(x)))
            .collect();

        let inv_h = |x: [f64; 2]| 1.0 / params.depth.eval(x);
        let k = params.half_step;
        let divdiv = assemble_divdiv(v, k * k * params.pressure_scale())?;
        let lite = assemble_weighted_vector_mass(v, &inv_h, degree)?
            .linear_combination(1.0, &divdiv, 1.0)?;
        let riesz_fixed = lite.linear_combination(
            1.0,
            &assemble_weighted_vector_mass(v, &|_| 1.0, degree)?,
            1.0,
        )?;
        Ok(NonlinearProblem {
            lite: reduction.square(&lite),
            riesz_fixed: reduction.square(&riesz_fixed),
            params,
            v,
            law,
            base,
            rhs,
            anchor,
            reduction,
            degree,
            tables,
            inv_depth,
        })
    }

    /// The undamped linear operator `A₀`.
    pub fn base(&self) -> &BlockSystem {
        &self.base
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Damping argument `w` at every quadrature point, `[cell * nq + q]`.
    fn damping_argument(&self, x: &[f64]) -> Vec<[f64; 2]> {
        let mut u = self.reduction.extend(&x[..self.base.nu()]);
        if let Some(a) = &self.anchor {
            for (ui, ai) in u.iter_mut().zip(a) {
                *ui = 0.5 * (*ui + ai);
            }
        }
        let mut out = Vec::new();
        for (c, t) in self.tables.iter().enumerate() {
            let coeffs: Vec<f64> = self.v.cell_dofs(c).iter().map(|&(g, _)| u[g]).collect();
            out.extend((0..t.num_points()).map(|q| t.eval(q, &coeffs)));
        }
        out
    }

    fn residual_factor(&self) -> f64 {
        let k = self.params.half_step;
        if self.anchor.is_some() {
            2.0 * k
        } else {
            k
        }
    }

    /// `F(x)` on the reduced block unknowns.
    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut r = vec![0.0; self.dim()];
        self.base.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        let wq = self.damping_argument(x);
        let sigma = self.residual_factor();
        let mut full = vec![0.0; self.v.ndofs()];
        let mut idx = 0;
        for (c, t) in self.tables.iter().enumerate() {
            let dofs = self.v.cell_dofs(c);
            for q in 0..t.num_points() {
                let gv = self.law.g(wq[idx]);
                let s = sigma * t.weights[q] * self.inv_depth[idx];
                for (i, &(gi, _)) in dofs.iter().enumerate() {
                    let p = t.value(q, i);
                    full[gi] += s * (gv[0] * p[0] + gv[1] * p[1]);
                }
                idx += 1;
            }
        }
        for (ri, fi) in r.iter_mut().zip(self.reduction.restrict(&full)) {
            *ri += fi;
        }
        Ok(r)
    }

    /// Reduced `((k/H) g'(w) ψ_j, ψ_i)`.
    pub fn damping_matrix(&self, x: &[f64]) -> Result<CsrMatrix> {
        let wq = self.damping_argument(x);
        let nq = self.tables.first().map_or(0, |t| t.num_points());
        let k = self.params.half_step;
        let m = assemble_tensor_mass(self.v, self.degree, |c, q, _| {
            let i = c * nq + q;
            let d = self.law.g_prime(wq[i]);
            let s = k * self.inv_depth[i];
            [[s * d[0][0], s * d[0][1]], [s * d[1][0], s * d[1][1]]]
        })?;
        Ok(self.reduction.square(&m))
    }

    /// Linearization of `F` about `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<BlockSystem> {
        self.base.with_velocity_term(&self.damping_matrix(x)?)
    }

    /// Riesz preconditioner with `C ↔ g'(w)`, or the frozen damping-free
    /// variants.
    pub fn preconditioner(&self, x: &[f64], kind: PreconditionerKind) -> Result<Preconditioner> {
        let scale = self.params.pressure_scale();
        let pw = if kind == PreconditionerKind::None {
            vec![1.0; self.base.neta()]
        } else {
            self.base
                .mass()
                .diagonal()
                .iter()
                .map(|m| scale * m)
                .collect()
        };
        let pv = match kind {
            PreconditionerKind::Riesz => {
                self.riesz_fixed
                    .linear_combination(1.0, &self.damping_matrix(x)?, 1.0)?
            }
            PreconditionerKind::RieszLite => self.lite.clone(),
            PreconditionerKind::MassDiag => self.base.mtilde().clone(),
            PreconditionerKind::None => CsrMatrix::identity(self.base.nu()),
        };
        Preconditioner::from_blocks(kind, pv, pw)
    }
}

/// Newton iteration from `x0`. Each linear step is solved by GMRES with
/// `kind`: the Riesz preconditioner is rebuilt at every iterate, the others
/// are built once.
pub fn newton_solve(
    problem: &NonlinearProblem,
    x0: &[f64],
    kind: PreconditionerKind,
    cfg: &SolverConfig,
    ncfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)> {
    let mut x = x0.to_vec();
    let mut f = problem.residual(&x)?;
    let f0 = norm2(&f);
    let mut report = NewtonReport {
        iterations: 0,
        linear_iterations: Vec::new(),
        residual_norms: vec![f0],
    };
    if f0 <= ncfg.atol {
        return Ok((x, report));
    }
    let frozen = match kind {
        PreconditionerKind::Riesz => None,
        _ => Some(problem.preconditioner(&x, kind)?),
    };
    for it in 1..=ncfg.max_iter {
        let jac = problem.jacobian(&x)?;
        let rebuilt;
        let pc = match &frozen {
            Some(p) => p,
            None => {
                rebuilt = problem.preconditioner(&x, kind)?;
                &rebuilt
            }
        };
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let (dx, rep) = gmres(&jac, pc, &neg, None, cfg)?;
        if !rep.converged {
            return Err(Error::NotConverged {
                iterations: rep.iterations,
                residual: rep.residual,
            });
        }
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        f = problem.residual(&x)?;
        let fn_ = norm2(&f);
        report.iterations = it;
        report.linear_iterations.push(rep.iterations);
        report.residual_norms.push(fn_);
        if !fn_.is_finite() {
            break;
        }
        if fn_ <= ncfg.atol || fn_ <= ncfg.rtol * f0 {
            return Ok((x, report));
        }
    }
    Err(Error::NewtonDiverged(report.iterations))
}
