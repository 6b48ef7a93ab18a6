//! Crank–Nicolson time integration with energy tracking.

use std::io::{self, Write};

use crate::assembly::{
    assemble_vector_load, build_preconditioner, build_system, BlockSystem, BoundaryReduction,
    Preconditioner, PreconditionerKind, TideParams,
};
use crate::fespace::DofMap;
use crate::krylov::{gmres, SolveReport, SolverConfig};
use crate::{Error, Result};

/// Reduced velocity and elevation coefficients at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(system: &BlockSystem) -> Self {
        State {
            u: vec![0.0; system.nu()],
            eta: vec![0.0; system.neta()],
            t: 0.0,
        }
    }

    /// Interpolates `u` into the RT space (dropping boundary fluxes) and
    /// projects `eta` onto piecewise constants.
    pub fn from_fields(
        v: &DofMap,
        w: &DofMap,
        u: impl Fn([f64; 2]) -> [f64; 2],
        eta: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let red = BoundaryReduction::new(v);
        Ok(State {
            u: red.restrict(&v.interpolate(u)?),
            eta: w.project_scalar(eta)?,
            t: 0.0,
        })
    }

    fn check(&self, system: &BlockSystem) -> Result<()> {
        for (expected, actual) in [(system.nu(), self.u.len()), (system.neta(), self.eta.len())] {
            if expected != actual {
                return Err(Error::DimensionMismatch { expected, actual });
            }
        }
        Ok(())
    }

    /// `[u; eta]`.
    pub fn to_block(&self) -> Vec<f64> {
        self.u.iter().chain(&self.eta).copied().collect()
    }
}

/// Momentum forcing `F(x, t)` on a velocity space.
pub struct Forcing<'a> {
    pub space: &'a DofMap,
    pub field: &'a (dyn Fn([f64; 2], f64) -> [f64; 2] + Sync),
    pub degree: usize,
}

impl Forcing<'_> {
    /// Reduced load `(F(·, t), ψ_i)`.
    pub fn load(&self, t: f64) -> Result<Vec<f64>> {
        let full = assemble_vector_load(self.space, &|x| (self.field)(x, t), self.degree)?;
        Ok(BoundaryReduction::new(self.space).restrict(&full))
    }
}

/// `½ uᵀ M̃ u + ½ (β/ε²) ηᵀ M η`.
pub fn energy(state: &State, system: &BlockSystem) -> f64 {
    let quad = |a: &crate::CsrMatrix, x: &[f64]| -> f64 {
        let mut y = vec![0.0; a.nrows()];
        a.mul_add_to(1.0, x, &mut y);
        y.iter().zip(x).map(|(p, q)| p * q).sum()
    };
    0.5 * quad(system.mtilde(), &state.u)
        + 0.5 * system.pressure_scale() * quad(system.mass(), &state.eta)
}

/// One step of length `Δt = 2k`, with forcing sampled at `t + k`.
pub fn cn_step(
    state: &State,
    system: &BlockSystem,
    pc: &Preconditioner,
    cfg: &SolverConfig,
    forcing: Option<&Forcing>,
) -> Result<(State, SolveReport)> {
    state.check(system)?;
    let k = system.params().half_step;
    let load = forcing.map(|f| f.load(state.t + k)).transpose()?;
    let rhs = system.step_rhs(&state.u, &state.eta, load.as_deref(), None)?;
    let (x, report) = gmres(system, pc, &rhs, None, cfg)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    let (u, eta) = system.split(&x);
    Ok((
        State {
            u: u.to_vec(),
            eta: eta.to_vec(),
            t: state.t + 2.0 * k,
        },
        report,
    ))
}

/// Sequence of `(t, E)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub points: Vec<(f64, f64)>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// `max_n |E_n - E_0| / E_0`.
    pub fn max_relative_drift(&self) -> f64 {
        let Some(&(_, e0)) = self.points.first() else {
            return 0.0;
        };
        self.energies()
            .map(|e| (e - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,E")?;
        for (t, e) in &self.points {
            writeln!(out, "{t},{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: State,
    pub trace: EnergyTrace,
    /// GMRES iterations per step.
    pub iterations: Vec<usize>,
}

/// Takes `n_steps` Crank–Nicolson steps from `initial`.
pub fn run(
    initial: &State,
    system: &BlockSystem,
    pc: &Preconditioner,
    cfg: &SolverConfig,
    n_steps: usize,
    forcing: Option<&Forcing>,
) -> Result<RunOutput> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let mut state = initial.clone();
    state.check(system)?;
    let mut trace = EnergyTrace::default();
    trace.points.push((state.t, energy(&state, system)));
    let mut iterations = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let (next, rep) = cn_step(&state, system, pc, cfg, forcing)?;
        state = next;
        iterations.push(rep.iterations);
        trace.points.push((state.t, energy(&state, system)));
    }
    Ok(RunOutput {
        state,
        trace,
        iterations,
    })
}

/// Builds the step operator for `Δt = 2 * params.half_step` and runs.
pub fn simulate(
    params: &TideParams,
    v: &DofMap,
    w: &DofMap,
    kind: PreconditionerKind,
    cfg: &SolverConfig,
    initial: &State,
    n_steps: usize,
) -> Result<RunOutput> {
    let system = build_system(params, v, w)?;
    let pc = build_preconditioner(params, v, w, kind)?;
    run(initial, &system, &pc, cfg, n_steps, None)
}
