//! Sweep drivers behind the command-line harness.
//!
//! Every driver returns typed results plus CSV series. Sweep points run in
//! parallel, but results are always collected in the order of the spec
//! lists, so identical specs give byte-identical CSV.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::assembly::{
    assemble_scalar_load, build_preconditioner, build_system, PreconditionerKind, TideParams,
};
use crate::fespace::DofMap;
use crate::krylov::{gmres, SolveReport, SolverConfig};
use crate::mesh::CellKind;
use crate::newton::{newton_solve, Cubic, DampingLaw, NewtonConfig, NoDamping, NonlinearProblem};
use crate::stepper::{energy, run, EnergyTrace, State};
use crate::verify::{check_bounds_sweep, spaces, write_spectral_csv, SpectralGrid, SpectralReport};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    MeshSweep,
    KEpsSweep,
    Nonlinear,
    Spectral,
    Energy,
    Convergence,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MeshSweep => "mesh",
            Mode::KEpsSweep => "keps",
            Mode::Nonlinear => "nonlinear",
            Mode::Spectral => "spectral",
            Mode::Energy => "energy",
            Mode::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "mesh" | "mesh-sweep" | "meshsweep" => Mode::MeshSweep,
            "keps" | "keps-sweep" | "kepssweep" => Mode::KEpsSweep,
            "nonlinear" => Mode::Nonlinear,
            "spectral" => Mode::Spectral,
            "energy" => Mode::Energy,
            "convergence" => Mode::Convergence,
            other => return Err(Error::InvalidArgument(format!("unknown mode '{other}'"))),
        })
    }
}

pub fn parse_cell(s: &str) -> Result<CellKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "tri" | "triangle" => Ok(CellKind::Triangle),
        "quad" | "square" => Ok(CellKind::Quad),
        other => Err(Error::InvalidArgument(format!("unknown cell '{other}'"))),
    }
}

/// Damping law of the nonlinear mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Cubic,
    None,
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cubic" => Ok(Law::Cubic),
            "none" | "zero" => Ok(Law::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown damping law '{other}'"
            ))),
        }
    }
}

/// Starting point of the nonlinear mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    /// Solution of the linear problem without damping.
    Undamped,
    Zero,
}

impl FromStr for Seed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "undamped" | "linear" => Ok(Seed::Undamped),
            "zero" => Ok(Seed::Zero),
            other => Err(Error::InvalidArgument(format!("unknown seed '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub cell: CellKind,
    pub pc: PreconditionerKind,
    pub ns: Vec<usize>,
    pub ks: Vec<f64>,
    pub epss: Vec<f64>,
    pub beta: f64,
    pub c: f64,
    pub f: f64,
    pub solver: SolverConfig,
    pub newton: NewtonConfig,
    pub quad_degree: Option<usize>,
    pub law: Law,
    pub seed: Seed,
    /// Time step of the energy and convergence modes.
    pub dt: f64,
    /// Step count of the energy mode.
    pub steps: usize,
    /// Final time of the convergence mode.
    pub t_final: f64,
}

impl ExperimentSpec {
    /// Desk-scale defaults for `mode`: `C = f = 1`, `β = 0.1`, `ε = 0.01`.
    pub fn new(mode: Mode) -> Self {
        let (ns, ks, epss) = match mode {
            Mode::MeshSweep => (vec![8, 16, 32, 64], vec![1e0, 1e-2, 1e-4, 1e-6], vec![0.01]),
            Mode::KEpsSweep => (
                vec![64],
                vec![1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
                vec![0.1, 0.01, 0.001],
            ),
            Mode::Nonlinear => (vec![8, 16, 32], vec![1e-2], vec![0.01]),
            Mode::Spectral => (vec![2, 4, 8], vec![1e-3, 1e-1, 1.0], vec![0.1, 0.01]),
            Mode::Energy => (vec![16], vec![0.025], vec![0.01]),
            Mode::Convergence => (vec![8], vec![0.025], vec![1.0]),
        };
        ExperimentSpec {
            mode,
            cell: CellKind::Triangle,
            pc: PreconditionerKind::Riesz,
            ns,
            ks,
            epss,
            beta: 0.1,
            c: 1.0,
            f: 1.0,
            solver: SolverConfig::default(),
            newton: NewtonConfig::default(),
            quad_degree: None,
            law: Law::Cubic,
            seed: Seed::Undamped,
            dt: 0.05,
            steps: 100,
            t_final: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.ns.is_empty() || self.ks.is_empty() || self.epss.is_empty() {
            return bad("N, k and eps lists must be nonempty");
        }
        if self.ns.contains(&0) {
            return bad("N must be positive");
        }
        if self.ks.iter().any(|k| !(*k > 0.0)) || self.epss.iter().any(|e| !(*e > 0.0)) {
            return bad("k and eps must be positive");
        }
        if !(self.beta > 0.0) || !(self.c >= 0.0) || self.f.abs() > 1.0 {
            return bad("need beta > 0, C >= 0 and |f| <= 1");
        }
        if !(self.dt > 0.0) || self.steps == 0 || !(self.t_final > 0.0) {
            return bad("need dt > 0, steps >= 1 and a positive final time");
        }
        if !(self.newton.atol >= 0.0) || !(self.newton.rtol >= 0.0) || self.newton.max_iter == 0 {
            return bad("invalid Newton tolerances");
        }
        self.solver.validate()
    }

    pub fn params(&self, k: f64, eps: f64) -> TideParams {
        TideParams::new(k)
            .with_rossby(eps)
            .with_burger(self.beta)
            .with_drag(self.c)
            .with_coriolis(self.f)
            .with_quad_degree(self.quad_degree)
    }
}

/// Outcome of one linear solve; `iterations` is `None` when it failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOutcome {
    pub iterations: Option<usize>,
    pub residual: f64,
}

impl SolveOutcome {
    fn from_report(r: &SolveReport) -> Self {
        SolveOutcome {
            iterations: r.converged.then_some(r.iterations),
            residual: r.residual,
        }
    }

    fn failed() -> Self {
        SolveOutcome {
            iterations: None,
            residual: f64::NAN,
        }
    }

    pub fn csv_value(&self) -> String {
        self.iterations.map_or("-1".to_string(), |i| i.to_string())
    }
}

/// One CSV file's worth of output.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Suffix distinguishing sibling files, empty for a single series.
    pub label: String,
    pub header: String,
    pub rows: Vec<String>,
    pub failures: usize,
}

impl Series {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header)?;
        for r in &self.rows {
            writeln!(out, "{r}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// `(β/ε²)` times the steady source `(sin πx cos πy, φ_i)` as a block
/// right-hand side with zero velocity part.
pub fn steady_rhs(params: &TideParams, v: &DofMap, w: &DofMap) -> Result<Vec<f64>> {
    let sys = build_system(params, v, w)?;
    let g = assemble_scalar_load(w, &|x| (PI * x[0]).sin() * (PI * x[1]).cos(), 4)?;
    sys.step_rhs(&vec![0.0; sys.nu()], &vec![0.0; sys.neta()], None, Some(&g))
}

/// Steady canonical problem on an `n × n` mesh, solved from a zero guess.
pub fn steady_solve(
    params: &TideParams,
    n: usize,
    cell: CellKind,
    kind: PreconditionerKind,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let (v, w) = spaces(n, cell)?;
    let sys = build_system(params, &v, &w)?;
    let pc = build_preconditioner(params, &v, &w, kind)?;
    let b = steady_rhs(params, &v, &w)?;
    gmres(&sys, &pc, &b, None, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshSweep {
    pub k: f64,
    pub eps: f64,
    /// `(N, outcome)` in spec order.
    pub points: Vec<(usize, SolveOutcome)>,
}

impl MeshSweep {
    /// Iteration counts, `None` if any solve failed.
    pub fn counts(&self) -> Option<Vec<usize>> {
        self.points.iter().map(|(_, o)| o.iterations).collect()
    }
}

fn label(prefix: &str, value: f64, many: bool) -> String {
    if many {
        format!("{prefix}{value}")
    } else {
        String::new()
    }
}

/// One series `(N, iterations)` for every `(k, ε)` pair of the spec.
pub fn run_mesh_sweep(spec: &ExperimentSpec) -> Result<Vec<MeshSweep>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &k in &spec.ks {
        for &eps in &spec.epss {
            for &n in &spec.ns {
                jobs.push((k, eps, n));
            }
        }
    }
    let outcomes: Vec<SolveOutcome> = jobs
        .par_iter()
        .map(|&(k, eps, n)| {
            steady_solve(&spec.params(k, eps), n, spec.cell, spec.pc, &spec.solver)
                .map(|(_, r)| SolveOutcome::from_report(&r))
                .unwrap_or_else(|_| SolveOutcome::failed())
        })
        .collect();
    let mut out = Vec::new();
    for (chunk, job) in outcomes
        .chunks(spec.ns.len())
        .zip(jobs.chunks(spec.ns.len()))
    {
        out.push(MeshSweep {
            k: job[0].0,
            eps: job[0].1,
            points: job.iter().map(|j| j.2).zip(chunk.iter().copied()).collect(),
        });
    }
    Ok(out)
}

pub fn mesh_sweep_series(spec: &ExperimentSpec, sweeps: &[MeshSweep]) -> Vec<Series> {
    let many_k = spec.ks.len() > 1;
    let many_eps = spec.epss.len() > 1;
    sweeps
        .iter()
        .map(|s| Series {
            label: format!(
                "{}{}",
                label(".k", s.k, many_k),
                label(".eps", s.eps, many_eps)
            ),
            header: "N,iterations".into(),
            rows: s
                .points
                .iter()
                .map(|(n, o)| format!("{n},{}", o.csv_value()))
                .collect(),
            failures: s
                .points
                .iter()
                .filter(|(_, o)| o.iterations.is_none())
                .count(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEpsSweep {
    pub eps: f64,
    pub n: usize,
    /// `(k, outcome)` in spec order.
    pub points: Vec<(f64, SolveOutcome)>,
}

impl KEpsSweep {
    pub fn counts(&self) -> Option<Vec<usize>> {
        self.points.iter().map(|(_, o)| o.iterations).collect()
    }
}

/// One series `(k, iterations)` per `ε` on the first mesh of the spec.
pub fn run_keps_sweep(spec: &ExperimentSpec) -> Result<Vec<KEpsSweep>> {
    spec.validate()?;
    let n = spec.ns[0];
    let jobs: Vec<(f64, f64)> = spec
        .epss
        .iter()
        .flat_map(|&e| spec.ks.iter().map(move |&k| (e, k)))
        .collect();
    let outcomes: Vec<SolveOutcome> = jobs
        .par_iter()
        .map(|&(eps, k)| {
            steady_solve(&spec.params(k, eps), n, spec.cell, spec.pc, &spec.solver)
                .map(|(_, r)| SolveOutcome::from_report(&r))
                .unwrap_or_else(|_| SolveOutcome::failed())
        })
        .collect();
    Ok(outcomes
        .chunks(spec.ks.len())
        .zip(&spec.epss)
        .map(|(chunk, &eps)| KEpsSweep {
            eps,
            n,
            points: spec.ks.iter().copied().zip(chunk.iter().copied()).collect(),
        })
        .collect())
}

pub fn keps_series(spec: &ExperimentSpec, sweeps: &[KEpsSweep]) -> Vec<Series> {
    let many = spec.epss.len() > 1;
    sweeps
        .iter()
        .map(|s| Series {
            label: label(".eps", s.eps, many),
            header: "k,iterations".into(),
            rows: s
                .points
                .iter()
                .map(|(k, o)| format!("{k},{}", o.csv_value()))
                .collect(),
            failures: s
                .points
                .iter()
                .filter(|(_, o)| o.iterations.is_none())
                .count(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearPoint {
    pub n: usize,
    /// Newton iterations, `None` on failure.
    pub newton_iterations: Option<usize>,
    /// GMRES iterations of each Newton step.
    pub linear_iterations: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

impl NonlinearPoint {
    /// Linear iterations in the final Newton step; 0 when the seed already
    /// meets the tolerance.
    pub fn lin(&self) -> Option<usize> {
        self.newton_iterations
            .map(|_| self.linear_iterations.last().copied().unwrap_or(0))
    }
}

fn nonlinear_point(spec: &ExperimentSpec, n: usize, k: f64, eps: f64) -> Result<NonlinearPoint> {
    let (v, w) = spaces(n, spec.cell)?;
    let undamped = spec.params(k, eps).with_drag(0.0);
    let b = steady_rhs(&undamped, &v, &w)?;
    let x0 = match spec.seed {
        Seed::Zero => vec![0.0; b.len()],
        Seed::Undamped => {
            let sys = build_system(&undamped, &v, &w)?;
            let pc = build_preconditioner(&undamped, &v, &w, spec.pc)?;
            let (x, rep) = gmres(&sys, &pc, &b, None, &spec.solver)?;
            if !rep.converged {
                return Err(Error::NotConverged {
                    iterations: rep.iterations,
                    residual: rep.residual,
                });
            }
            x
        }
    };
    let law: &dyn DampingLaw = match spec.law {
        Law::Cubic => &Cubic,
        Law::None => &NoDamping,
    };
    let problem = NonlinearProblem::steady(&undamped, &v, &w, law, b)?;
    let (_, rep) = newton_solve(&problem, &x0, spec.pc, &spec.solver, &spec.newton)?;
    Ok(NonlinearPoint {
        n,
        newton_iterations: Some(rep.iterations),
        linear_iterations: rep.linear_iterations,
        residual_norms: rep.residual_norms,
    })
}

/// Steady problem with damping `g(u)` in place of `C u`, Newton from the
/// seed of the spec, for every `N` at the first `(k, ε)`.
pub fn run_nonlinear(spec: &ExperimentSpec) -> Result<Vec<NonlinearPoint>> {
    spec.validate()?;
    let (k, eps) = (spec.ks[0], spec.epss[0]);
    Ok(spec
        .ns
        .par_iter()
        .map(|&n| {
            nonlinear_point(spec, n, k, eps).unwrap_or(NonlinearPoint {
                n,
                newton_iterations: None,
                linear_iterations: Vec::new(),
                residual_norms: Vec::new(),
            })
        })
        .collect())
}

pub fn nonlinear_series(points: &[NonlinearPoint]) -> Series {
    Series {
        label: String::new(),
        header: "N,Lin".into(),
        rows: points
            .iter()
            .map(|p| format!("{},{}", p.n, p.lin().map_or("-1".into(), |l| l.to_string())))
            .collect(),
        failures: points.iter().filter(|p| p.lin().is_none()).count(),
    }
}

/// Dense spectral bounds over `N × k × ε` for the spec's cell and
/// preconditioner.
pub fn run_spectral(spec: &ExperimentSpec) -> Result<Vec<SpectralReport>> {
    spec.validate()?;
    check_bounds_sweep(&SpectralGrid {
        ns: spec.ns.clone(),
        cells: vec![spec.cell],
        ks: spec.ks.clone(),
        epss: spec.epss.clone(),
        kinds: vec![spec.pc],
        beta: spec.beta,
        c: spec.c,
        f: spec.f,
    })
}

pub fn spectral_series(reports: &[SpectralReport]) -> Series {
    let mut buf = Vec::new();
    write_spectral_csv(reports, &mut buf).expect("writing to memory");
    let text = String::from_utf8(buf).expect("ascii output");
    let mut lines = text.lines().map(str::to_string);
    Series {
        label: String::new(),
        header: lines.next().unwrap_or_default(),
        rows: lines.collect(),
        failures: 0,
    }
}

/// Smooth initial state with zero normal flux on the boundary.
pub fn smooth_initial_state(v: &DofMap, w: &DofMap) -> Result<State> {
    let bump = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
    State::from_fields(
        v,
        w,
        |x| [bump(x), 0.5 * bump(x)],
        |x| 0.1 * (PI * x[0]).cos() * (PI * x[1]).cos(),
    )
}

/// Energy trace of `steps` unforced steps of length `dt` from the smooth
/// initial state, on the first mesh and `ε` of the spec.
pub fn run_energy(spec: &ExperimentSpec) -> Result<EnergyTrace> {
    spec.validate()?;
    let (v, w) = spaces(spec.ns[0], spec.cell)?;
    let params = spec.params(0.5 * spec.dt, spec.epss[0]);
    let sys = build_system(&params, &v, &w)?;
    let pc = build_preconditioner(&params, &v, &w, spec.pc)?;
    let s0 = smooth_initial_state(&v, &w)?;
    Ok(run(&s0, &sys, &pc, &spec.solver, spec.steps, None)?.trace)
}

pub fn energy_series(trace: &EnergyTrace) -> Series {
    Series {
        label: String::new(),
        header: "t,E".into(),
        rows: trace
            .points
            .iter()
            .map(|(t, e)| format!("{t},{e}"))
            .collect(),
        failures: 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// Energy-norm distance to the reference solution at the final time.
    pub error: f64,
    /// Error of the previous (twice larger) step over this one.
    pub ratio: Option<f64>,
}

/// Self-convergence in time at `t_final`: steps `dt`, `dt/2`, `dt/4`
/// against a `dt/32` reference.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<ConvergenceRow>> {
    spec.validate()?;
    let (v, w) = spaces(spec.ns[0], spec.cell)?;
    let s0 = smooth_initial_state(&v, &w)?;
    let base_steps = (spec.t_final / spec.dt).round() as usize;
    if base_steps == 0 || ((base_steps as f64) * spec.dt - spec.t_final).abs() > 1e-9 * spec.t_final
    {
        return Err(Error::InvalidArgument(
            "final time must be a multiple of dt".into(),
        ));
    }
    let levels = [1usize, 2, 4, 32];
    let finals: Vec<State> = levels
        .par_iter()
        .map(|&m| {
            let params = spec.params(0.5 * spec.dt / m as f64, spec.epss[0]);
            let sys = build_system(&params, &v, &w)?;
            let pc = build_preconditioner(&params, &v, &w, spec.pc)?;
            Ok(run(&s0, &sys, &pc, &spec.solver, base_steps * m, None)?.state)
        })
        .collect::<Result<_>>()?;
    let reference = &finals[3];
    let params = spec.params(0.5 * spec.dt, spec.epss[0]);
    let sys = build_system(&params, &v, &w)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for (i, s) in finals[..3].iter().enumerate() {
        let diff = State {
            u: s.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect(),
            eta: s
                .eta
                .iter()
                .zip(&reference.eta)
                .map(|(a, b)| a - b)
                .collect(),
            t: s.t,
        };
        let error = (2.0 * energy(&diff, &sys)).sqrt();
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(ConvergenceRow {
            dt: spec.dt / levels[i] as f64,
            error,
            ratio,
        });
    }
    Ok(rows)
}

pub fn convergence_series(rows: &[ConvergenceRow]) -> Series {
    Series {
        label: String::new(),
        header: "dt,error,ratio".into(),
        rows: rows
            .iter()
            .map(|r| {
                let ratio = r.ratio.map_or(String::new(), |x| x.to_string());
                format!("{},{},{}", r.dt, r.error, ratio)
            })
            .collect(),
        failures: 0,
    }
}

/// Runs the spec's mode and returns its CSV series.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Series>> {
    Ok(match spec.mode {
        Mode::MeshSweep => mesh_sweep_series(spec, &run_mesh_sweep(spec)?),
        Mode::KEpsSweep => keps_series(spec, &run_keps_sweep(spec)?),
        Mode::Nonlinear => vec![nonlinear_series(&run_nonlinear(spec)?)],
        Mode::Spectral => vec![spectral_series(&run_spectral(spec)?)],
        Mode::Energy => vec![energy_series(&run_energy(spec)?)],
        Mode::Convergence => vec![convergence_series(&run_convergence(spec)?)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(mode);
        s.ns = vec![4, 8];
        s
    }

    #[test]
    fn parsing() {
        assert_eq!("keps".parse::<Mode>().unwrap(), Mode::KEpsSweep);
        assert_eq!(parse_cell("quad").unwrap(), CellKind::Quad);
        assert!(parse_cell("hex").is_err());
        assert_eq!("none".parse::<Law>().unwrap(), Law::None);
        assert_eq!("zero".parse::<Seed>().unwrap(), Seed::Zero);
    }

    #[test]
    fn validation_rejects_empty_lists() {
        let mut s = ExperimentSpec::new(Mode::MeshSweep);
        s.ks.clear();
        assert!(s.validate().is_err());
        let mut s = ExperimentSpec::new(Mode::MeshSweep);
        s.ns = vec![0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn mesh_sweep_labels_and_rows() {
        let mut s = small(Mode::MeshSweep);
        s.ks = vec![1e-2, 1e-4];
        let sweeps = run_mesh_sweep(&s).unwrap();
        let series = mesh_sweep_series(&s, &sweeps);
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].label, ".k0.01");
        assert_eq!(series[0].header, "N,iterations");
        assert!(series[0].rows[0].starts_with("4,"));
        assert_eq!(series[0].failures, 0);
    }

    #[test]
    fn failures_are_marked() {
        let mut s = small(Mode::MeshSweep);
        s.ks = vec![1e-2];
        s.pc = PreconditionerKind::None;
        s.solver.maxit = 2;
        let series = mesh_sweep_series(&s, &run_mesh_sweep(&s).unwrap());
        assert_eq!(series[0].rows[0], "4,-1");
        assert_eq!(series[0].failures, 2);
    }

    #[test]
    fn output_is_deterministic() {
        let mut s = small(Mode::KEpsSweep);
        s.ns = vec![8];
        s.ks = vec![1e-1, 1e-3];
        let a = run_experiment(&s).unwrap();
        let b = run_experiment(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a[1].label, ".eps0.01");
    }

    #[test]
    fn spectral_rows_carry_the_lower_bound() {
        let mut s = ExperimentSpec::new(Mode::Spectral);
        s.ns = vec![4];
        s.ks = vec![0.1];
        s.epss = vec![0.1];
        let series = &run_experiment(&s).unwrap()[0];
        assert_eq!(series.header, SpectralReport::CSV_HEADER);
        let lo: f64 = series.rows[0].split(',').nth(7).unwrap().parse().unwrap();
        assert!((lo - 3f64.sqrt() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn undamped_energy_trace_is_flat() {
        let mut s = ExperimentSpec::new(Mode::Energy);
        s.ns = vec![6];
        s.c = 0.0;
        s.steps = 20;
        s.solver.rtol = 1e-12;
        let trace = run_energy(&s).unwrap();
        assert_eq!(trace.len(), 21);
        assert!(trace.max_relative_drift() < 1e-10);
    }

    #[test]
    fn convergence_ratios_near_four() {
        let mut s = ExperimentSpec::new(Mode::Convergence);
        s.ns = vec![4];
        s.epss = vec![1.0];
        s.beta = 1.0;
        s.solver.rtol = 1e-12;
        let rows = run_convergence(&s).unwrap();
        let r = rows[1].ratio.unwrap();
        assert!((3.5..=4.5).contains(&r), "{rows:?}");
        let series = convergence_series(&rows);
        assert_eq!(series.header, "dt,error,ratio");
        assert!(series.rows[0].ends_with(','));
    }

    #[test]
    fn seed_meeting_tolerance_reports_zero_lin() {
        let p = NonlinearPoint {
            n: 4,
            newton_iterations: Some(0),
            linear_iterations: Vec::new(),
            residual_norms: vec![1e-12],
        };
        assert_eq!(p.lin(), Some(0));
        assert_eq!(nonlinear_series(&[p]).rows, vec!["4,0"]);
    }

    #[test]
    fn degenerate_nonlinear_run_reproduces_linear_counts() {
        let mut s = small(Mode::Nonlinear);
        s.law = Law::None;
        s.seed = Seed::Zero;
        s.solver.rtol = 1e-13;
        let points = run_nonlinear(&s).unwrap();
        let mut lin = s.clone();
        lin.mode = Mode::MeshSweep;
        lin.c = 0.0;
        let sweeps = run_mesh_sweep(&lin).unwrap();
        for (p, (_, o)) in points.iter().zip(&sweeps[0].points) {
            assert_eq!(p.newton_iterations, Some(1));
            assert_eq!(p.lin(), o.iterations);
        }
    }
}
