use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use tide_core::experiment::{parse_cell, run_experiment, ExperimentSpec, Law, Mode, Seed, Series};
use tide_core::{CellKind, PreconditionerKind};

/// Iteration-count sweeps, spectral checks and time integrations for the
/// preconditioned tide model. Writes CSV.
#[derive(Parser, Debug)]
#[command(name = "tide", version)]
struct Cli {
    /// key=value file; command-line flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,
}

#[derive(clap::Args, Debug, Default)]
struct Settings {
    /// mesh, keps, nonlinear, spectral, energy or convergence.
    #[arg(long)]
    mode: Option<Mode>,
    /// tri or quad.
    #[arg(long, value_parser = parse_cell)]
    cell: Option<CellKind>,
    /// mass, riesz, riesz-lite or none.
    #[arg(long)]
    pc: Option<PreconditionerKind>,
    /// Mesh sizes, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Half time steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    /// Rossby numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    beta: Option<f64>,
    /// Linear drag coefficient.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Coriolis parameter.
    #[arg(long)]
    f: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    restart: Option<usize>,
    #[arg(long)]
    maxit: Option<usize>,
    /// CSV path. Several series go to sibling files named after it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Nonlinear mode: cubic or none.
    #[arg(long)]
    law: Option<Law>,
    /// Nonlinear mode: undamped or zero.
    #[arg(long)]
    seed: Option<Seed>,
    #[arg(long)]
    newton_atol: Option<f64>,
    #[arg(long)]
    newton_rtol: Option<f64>,
    #[arg(long)]
    newton_maxit: Option<usize>,
    /// Time step of the energy and convergence modes.
    #[arg(long)]
    dt: Option<f64>,
    /// Step count of the energy mode.
    #[arg(long)]
    steps: Option<usize>,
    /// Final time of the convergence mode.
    #[arg(long)]
    t_final: Option<f64>,
}

fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("'{s}': {e}"))
        })
        .collect()
}

fn one<T: std::str::FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse::<T>()
        .map_err(|e| anyhow::anyhow!("'{v}': {e}"))
}

impl Settings {
    fn from_config(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key=value", i + 1);
            };
            let value = value.trim();
            let key = key.trim().trim_start_matches('-').replace('_', "-");
            let r: Result<()> = (|| {
                match key.as_str() {
                    "mode" => s.mode = Some(one(value)?),
                    "cell" => s.cell = Some(parse_cell(value)?),
                    "pc" => s.pc = Some(one(value)?),
                    "N" | "n" => s.n = Some(list(value)?),
                    "k" => s.k = Some(list(value)?),
                    "eps" => s.eps = Some(list(value)?),
                    "beta" => s.beta = Some(one(value)?),
                    "C" | "c" => s.c = Some(one(value)?),
                    "f" => s.f = Some(one(value)?),
                    "rtol" => s.rtol = Some(one(value)?),
                    "restart" => s.restart = Some(one(value)?),
                    "maxit" => s.maxit = Some(one(value)?),
                    "out" => s.out = Some(PathBuf::from(value)),
                    "quad-degree" => s.quad_degree = Some(one(value)?),
                    "law" => s.law = Some(one(value)?),
                    "seed" => s.seed = Some(one(value)?),
                    "newton-atol" => s.newton_atol = Some(one(value)?),
                    "newton-rtol" => s.newton_rtol = Some(one(value)?),
                    "newton-maxit" => s.newton_maxit = Some(one(value)?),
                    "dt" => s.dt = Some(one(value)?),
                    "steps" => s.steps = Some(one(value)?),
                    "t-final" => s.t_final = Some(one(value)?),
                    other => bail!("unknown key '{other}'"),
                }
                Ok(())
            })();
            r.with_context(|| format!("config line {}", i + 1))?;
        }
        Ok(s)
    }

    /// Field-wise merge, `self` winning.
    fn or(self, o: Settings) -> Settings {
        Settings {
            mode: self.mode.or(o.mode),
            cell: self.cell.or(o.cell),
            pc: self.pc.or(o.pc),
            n: self.n.or(o.n),
            k: self.k.or(o.k),
            eps: self.eps.or(o.eps),
            beta: self.beta.or(o.beta),
            c: self.c.or(o.c),
            f: self.f.or(o.f),
            rtol: self.rtol.or(o.rtol),
            restart: self.restart.or(o.restart),
            maxit: self.maxit.or(o.maxit),
            out: self.out.or(o.out),
            quad_degree: self.quad_degree.or(o.quad_degree),
            law: self.law.or(o.law),
            seed: self.seed.or(o.seed),
            newton_atol: self.newton_atol.or(o.newton_atol),
            newton_rtol: self.newton_rtol.or(o.newton_rtol),
            newton_maxit: self.newton_maxit.or(o.newton_maxit),
            dt: self.dt.or(o.dt),
            steps: self.steps.or(o.steps),
            t_final: self.t_final.or(o.t_final),
        }
    }

    fn into_spec(self) -> Result<(ExperimentSpec, Option<PathBuf>)> {
        let Some(mode) = self.mode else {
            bail!("--mode is required (flag or config entry)");
        };
        let mut s = ExperimentSpec::new(mode);
        macro_rules! set {
            ($src:ident => $($dst:tt)+) => {
                if let Some(v) = self.$src {
                    s.$($dst)+ = v;
                }
            };
        }
        set!(cell => cell);
        set!(pc => pc);
        set!(n => ns);
        set!(k => ks);
        set!(eps => epss);
        set!(beta => beta);
        set!(c => c);
        set!(f => f);
        set!(rtol => solver.rtol);
        set!(restart => solver.restart);
        set!(maxit => solver.maxit);
        set!(law => law);
        set!(seed => seed);
        set!(newton_atol => newton.atol);
        set!(newton_rtol => newton.rtol);
        set!(newton_maxit => newton.max_iter);
        set!(dt => dt);
        set!(steps => steps);
        set!(t_final => t_final);
        if self.quad_degree.is_some() {
            s.quad_degree = self.quad_degree;
        }
        s.validate()?;
        Ok((s, self.out))
    }
}

/// `dir/run.csv` with label `.k0.01` becomes `dir/run.k0.01.csv`.
fn series_path(out: &Path, label: &str) -> PathBuf {
    if label.is_empty() {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}{label}"),
    };
    out.with_file_name(name)
}

fn write_series(series: &[Series], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            for s in series {
                let p = series_path(path, &s.label);
                fs::write(&p, s.to_csv_string())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
        }
        None => {
            let mut stdout = io::stdout().lock();
            for (i, s) in series.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout)?;
                }
                if !s.label.is_empty() {
                    writeln!(stdout, "# {}", s.label.trim_start_matches('.'))?;
                }
                s.write_csv(&mut stdout)?;
            }
        }
    }
    Ok(())
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    let settings = match &cli.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cli.settings.or(Settings::from_config(&text)?)
        }
        None => cli.settings,
    };
    let (spec, out) = settings.into_spec()?;
    let series = run_experiment(&spec)?;
    write_series(&series, out.as_deref())?;
    let failures: usize = series.iter().map(|s| s.failures).sum();
    if failures > 0 {
        eprintln!("{failures} solve(s) failed to converge");
    }
    Ok(failures == 0)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
