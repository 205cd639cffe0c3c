//! `nlz`: command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 1 numerical failure
//! (including a reproduction check that did not pass).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlz::dynamics::{self, AdiabaticBranch};
use nlz::experiments::output::{Check, OutputDir, Table};
use nlz::experiments::{self, fmt_num, linspace, Experiment};
use nlz::model::{default_half_window, ModelParams, QuantumState};
use nlz::phasespace;
use nlz::spectrum;
use nlz::{DynamicsError, ExperimentError, ModelError};
use serde_json::json;

use crate::config::{Overrides, Settings, OUTDIR_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Model(m) => m.into(),
            DynamicsError::BadConfig(_) | DynamicsError::OutOfRegime { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Dynamics(d) => d.into(),
            ExperimentError::UnknownExperiment(_) | ExperimentError::BadConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nlz",
    version,
    about = "Landau-Zener tunneling with amplitude-dependent coupling alpha + beta|a|^2"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [default: $NLZ_OUTDIR, else ./out]
    #[arg(long, global = true, value_name = "DIR")]
    outdir: Option<PathBuf>,
    /// Worker threads, 0 for one per logical core
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Linear coupling strength
    #[arg(long, global = true, value_name = "X")]
    alpha: Option<f64>,
    /// Relative integration tolerance
    #[arg(long, global = true, value_name = "X")]
    rel_tol: Option<f64>,
    /// Absolute integration tolerance
    #[arg(long, global = true, value_name = "X")]
    abs_tol: Option<f64>,
    /// Largest integration step in t
    #[arg(long, global = true, value_name = "X")]
    max_step: Option<f64>,
    /// Spacing in gamma of recorded sweep samples
    #[arg(long, global = true, value_name = "X")]
    sample_stride: Option<f64>,
    /// Do not write SVG plots
    #[arg(long, global = true)]
    no_svg: bool,
    /// Print the effective configuration as TOML and exit
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Adiabatic levels on a gamma grid
    #[command(allow_negative_numbers = true)]
    Spectrum(SpectrumArgs),
    /// Tunneling probability for one or more sweep rates
    #[command(allow_negative_numbers = true)]
    Tunnel(TunnelArgs),
    /// Level-count phase diagram with analytic boundaries
    #[command(allow_negative_numbers = true)]
    Phase(PhaseArgs),
    /// Classical fixed points at one bias or on a gamma grid
    #[command(allow_negative_numbers = true)]
    Fixedpoints(FixedPointArgs),
    /// Full sweep with per-sample state, energy and Bloch variables
    #[command(allow_negative_numbers = true)]
    Evolve(EvolveArgs),
    /// Regenerate figure datasets and acceptance checks
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Nonlinear coupling strength
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = -2.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma_max: f64,
    /// Number of gamma samples [default: grids.level_points]
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct TunnelArgs {
    /// Nonlinear coupling strength
    #[arg(long)]
    beta: f64,
    /// Sweep rates, comma separated
    #[arg(long = "v", value_name = "V", value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    /// Sweep start [default: -20 for v <= 0.01, else -50]
    #[arg(long)]
    gamma_start: Option<f64>,
    /// Sweep end [default: minus the default start]
    #[arg(long)]
    gamma_end: Option<f64>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[arg(long, default_value_t = -4.0)]
    beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_max: f64,
    /// [default: grids.phase_beta_points]
    #[arg(long)]
    beta_points: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 0.3)]
    gamma_max: f64,
    /// [default: grids.phase_gamma_points]
    #[arg(long)]
    gamma_points: Option<usize>,
}

#[derive(Debug, Args)]
struct FixedPointArgs {
    /// Nonlinear coupling strength
    #[arg(long)]
    beta: f64,
    /// Single bias; prints `branch,s` rows
    #[arg(long, conflicts_with_all = ["gamma_min", "gamma_max", "points"])]
    gamma: Option<f64>,
    #[arg(long, default_value_t = -1.0)]
    gamma_min: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_max: f64,
    /// [default: grids.fixed_point_samples]
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Initial {
    /// Lower adiabatic branch
    Lower,
    /// Upper adiabatic branch
    Upper,
    /// All population in mode a, s = -1
    A,
    /// All population in mode b, s = +1
    B,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// Nonlinear coupling strength
    #[arg(long)]
    beta: f64,
    #[arg(long = "v", value_name = "V")]
    rate: f64,
    #[arg(long)]
    gamma_start: Option<f64>,
    #[arg(long)]
    gamma_end: Option<f64>,
    #[arg(long, value_enum, default_value_t = Initial::Lower)]
    initial: Initial,
}

#[derive(Debug, Args)]
struct ReproArgs {
    /// fig1 ... fig6, criteria, or all
    experiment: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let flags = Overrides {
        outdir: g.outdir.clone(),
        jobs: g.jobs,
        alpha: g.alpha,
        no_svg: g.no_svg,
        rel_tol: g.rel_tol,
        abs_tol: g.abs_tol,
        max_step: g.max_step,
        sample_stride: g.sample_stride,
    };
    let env_outdir = std::env::var_os(OUTDIR_ENV).map(PathBuf::from);
    let settings = Settings::resolve(g.config.as_deref(), env_outdir, &flags)?;
    if g.dump_config {
        print!("{}", settings.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("no subcommand given; see --help".into()));
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;

    match command {
        Command::Spectrum(a) => cmd_spectrum(&settings, &a),
        Command::Tunnel(a) => cmd_tunnel(&settings, &a),
        Command::Phase(a) => cmd_phase(&settings, &a),
        Command::Fixedpoints(a) => cmd_fixedpoints(&settings, &a),
        Command::Evolve(a) => cmd_evolve(&settings, &a),
        Command::Repro(a) => cmd_repro(&settings, &a),
    }
}

fn require_finite(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite")))
    }
}

fn grid(name: &str, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    require_finite(&format!("{name}-min"), lo)?;
    require_finite(&format!("{name}-max"), hi)?;
    if points < 2 {
        return Err(CliError::Usage(format!(
            "{name} grid needs at least 2 points, got {points}"
        )));
    }
    if lo >= hi {
        return Err(CliError::Usage(format!("--{name}-min must be below --{name}-max")));
    }
    Ok(linspace(lo, hi, points))
}

fn finish(
    out: OutputDir,
    name: &str,
    settings: &Settings,
    params: serde_json::Value,
    started: Instant,
    checks: Vec<Check>,
) -> Result<PathBuf, CliError> {
    let dir = out.path().to_path_buf();
    let params = json!({ "command": params, "config": settings });
    out.finish(
        name,
        params,
        settings.integrator,
        started.elapsed().as_secs_f64(),
        checks,
    )?;
    Ok(dir)
}

fn cmd_spectrum(s: &Settings, a: &SpectrumArgs) -> Result<(), CliError> {
    let started = Instant::now();
    require_finite("beta", a.beta)?;
    let points = a.points.unwrap_or(s.grids.level_points);
    let gammas = grid("gamma", a.gamma_min, a.gamma_max, points)?;
    let curves = spectrum::level_curves(s.alpha, a.beta, &gammas).map_err(|e| CliError::Numerical(e.to_string()))?;

    let mut table = Table::new(&["gamma", "epsilon", "intensity", "branch"]);
    for p in &curves.points {
        table.push(vec![
            fmt_num(p.gamma),
            fmt_num(p.epsilon),
            fmt_num(p.intensity),
            p.branch.to_string(),
        ]);
    }
    let mut out = OutputDir::create(&s.outdir, "spectrum", s.svg)?;
    out.csv("levels", &table)?;
    let structure = spectrum::classify_structure(s.alpha, a.beta);
    let max_levels = gammas.iter().map(|&g| curves.at(g).count()).max().unwrap_or(0);
    let params =
        json!({ "alpha": s.alpha, "beta": a.beta, "gamma_range": [a.gamma_min, a.gamma_max], "points": points });
    let dir = finish(out, "spectrum", s, params, started, Vec::new())?;
    println!(
        "structure={structure} max_levels={max_levels} rows={} csv={}",
        table.len(),
        dir.join("levels.csv").display()
    );
    Ok(())
}

fn sweep_params(alpha: f64, beta: f64, v: f64, start: Option<f64>, end: Option<f64>) -> Result<ModelParams, CliError> {
    require_finite("beta", beta)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("--v must be positive, got {v}")));
    }
    let half = default_half_window(v);
    let start = start.unwrap_or(-half);
    let end = end.unwrap_or(-start);
    Ok(ModelParams::new(alpha, beta, v, start, end)?)
}

fn cmd_tunnel(s: &Settings, a: &TunnelArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let params: Vec<ModelParams> = a
        .rates
        .iter()
        .map(|&v| sweep_params(s.alpha, a.beta, v, a.gamma_start, a.gamma_end))
        .collect::<Result<_, _>>()?;
    let results = dynamics::tunneling_probabilities(&params, &s.integrator);

    let mut table = Table::new(&["v", "beta", "p", "p_lz", "p_adiabatic"]);
    let adiabatic = dynamics::adiabatic_probability_analytic(s.alpha, a.beta).unwrap_or(f64::NAN);
    let mut lines = Vec::new();
    for (p, r) in params.iter().zip(results) {
        let prob = r?;
        table.push_nums(&[p.v, p.beta, prob, dynamics::lz_reference(s.alpha, p.v), adiabatic]);
        lines.push(if params.len() == 1 {
            format!("p={}", fmt_num(prob))
        } else {
            format!("v={} p={}", fmt_num(p.v), fmt_num(prob))
        });
    }
    let mut out = OutputDir::create(&s.outdir, "tunnel", s.svg)?;
    out.csv("tunnel", &table)?;
    let p0 = &params[0];
    let cmd = json!({ "alpha": s.alpha, "beta": a.beta, "v": a.rates, "gamma_start": p0.gamma_start, "gamma_end": p0.gamma_end });
    finish(out, "tunnel", s, cmd, started, Vec::new())?;
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

fn cmd_phase(s: &Settings, a: &PhaseArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let betas = grid(
        "beta",
        a.beta_min,
        a.beta_max,
        a.beta_points.unwrap_or(s.grids.phase_beta_points),
    )?;
    let gammas = grid(
        "gamma",
        a.gamma_min,
        a.gamma_max,
        a.gamma_points.unwrap_or(s.grids.phase_gamma_points),
    )?;
    let d = phasespace::phase_diagram(s.alpha, &betas, &gammas);

    let mut out = OutputDir::create(&s.outdir, "phase", s.svg)?;
    let mut cells = Table::new(&["beta", "gamma", "count"]);
    for c in &d.cells {
        cells.push(vec![fmt_num(c.beta), fmt_num(c.gamma), c.count.to_string()]);
    }
    out.csv("phase", &cells)?;
    let mut regions = Table::new(&["beta", "structure"]);
    for (b, t) in &d.regions {
        regions.push(vec![fmt_num(*b), t.label().to_string()]);
    }
    out.csv("regions", &regions)?;
    let mut f = Table::new(&["beta", "gamma_c"]);
    for (b, g) in &d.boundary_f {
        f.push_nums(&[*b, *g]);
    }
    out.csv("boundary_f", &f)?;
    let mut g = Table::new(&["beta", "gamma_c1", "gamma_c2"]);
    for (b, g1, g2) in &d.boundary_g {
        g.push_nums(&[*b, *g1, *g2]);
    }
    out.csv("boundary_g", &g)?;
    let mut agreement = Table::new(&["beta", "max_abs_diff"]);
    for r in &d.agreement {
        agreement.push_nums(&[r.beta, r.max_abs_diff]);
    }
    out.csv("agreement", &agreement)?;

    let four = d.cells.iter().filter(|c| c.count == 4).count();
    let worst = d.agreement.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    let cmd = json!({ "alpha": s.alpha, "beta_range": [a.beta_min, a.beta_max], "gamma_range": [a.gamma_min, a.gamma_max],
                      "beta_points": betas.len(), "gamma_points": gammas.len() });
    finish(out, "phase", s, cmd, started, Vec::new())?;
    println!(
        "cells={} four_level={four} compared={} max_boundary_diff={}",
        d.cells.len(),
        d.agreement.len(),
        fmt_num(worst)
    );
    Ok(())
}

fn cmd_fixedpoints(s: &Settings, a: &FixedPointArgs) -> Result<(), CliError> {
    let started = Instant::now();
    require_finite("beta", a.beta)?;
    let gammas = match a.gamma {
        Some(g) => {
            require_finite("gamma", g)?;
            vec![g]
        }
        None => grid(
            "gamma",
            a.gamma_min,
            a.gamma_max,
            a.points.unwrap_or(s.grids.fixed_point_samples),
        )?,
    };
    let mut table = Table::new(&["gamma", "branch", "s"]);
    let mut rows = Vec::new();
    for &g in &gammas {
        for fp in phasespace::find_fixed_points(s.alpha, a.beta, g) {
            table.push(vec![fmt_num(g), fp.branch.name().to_string(), fmt_num(fp.s)]);
            rows.push(format!("{},{}", fp.branch.name(), fmt_num(fp.s)));
        }
    }
    let mut out = OutputDir::create(&s.outdir, "fixedpoints", s.svg)?;
    out.csv("fixed_points", &table)?;
    let cmd = json!({ "alpha": s.alpha, "beta": a.beta, "gammas": gammas.len(), "gamma": a.gamma });
    let dir = finish(out, "fixedpoints", s, cmd, started, Vec::new())?;
    if a.gamma.is_some() {
        println!("branch,s");
        for r in rows {
            println!("{r}");
        }
    } else {
        println!("rows={} csv={}", table.len(), dir.join("fixed_points.csv").display());
    }
    Ok(())
}

fn cmd_evolve(s: &Settings, a: &EvolveArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let params = sweep_params(s.alpha, a.beta, a.rate, a.gamma_start, a.gamma_end)?;
    let initial = match a.initial {
        Initial::Lower => dynamics::branch_state(&params, AdiabaticBranch::Lower),
        Initial::Upper => dynamics::branch_state(&params, AdiabaticBranch::Upper),
        Initial::A => QuantumState::mode_a(),
        Initial::B => QuantumState::mode_b(),
    };
    let r = dynamics::evolve(&params, &initial, &s.integrator)?;
    let fidelity = dynamics::fidelity_to_hole(&params, &r).ok();

    let mut table = Table::new(&[
        "gamma", "s", "theta", "energy", "a_re", "a_im", "b_re", "b_im", "F_hole",
    ]);
    for (k, smp) in r.samples.iter().enumerate() {
        let f = fidelity.as_ref().map_or(f64::NAN, |t| t.points[k].fidelity);
        table.push_nums(&[
            smp.gamma,
            smp.s,
            smp.theta,
            smp.energy,
            smp.state.a.re,
            smp.state.a.im,
            smp.state.b.re,
            smp.state.b.im,
            f,
        ]);
    }
    let mut out = OutputDir::create(&s.outdir, "evolve", s.svg)?;
    out.csv("sweep", &table)?;
    let cmd = json!({ "alpha": s.alpha, "beta": a.beta, "v": a.rate, "gamma_start": params.gamma_start,
                      "gamma_end": params.gamma_end, "initial": format!("{:?}", a.initial).to_lowercase() });
    let checks = vec![Check::at_most(
        "norm_drift",
        "largest norm deviation over the sweep",
        r.norm_drift,
        dynamics::NORM_DRIFT_TOL,
    )];
    finish(out, "evolve", s, cmd, started, checks)?;
    println!(
        "p={} s_final={} norm_drift={} steps={}",
        fmt_num(r.p_final),
        fmt_num(r.final_sample().s),
        fmt_num(r.norm_drift),
        r.steps
    );
    Ok(())
}

fn cmd_repro(s: &Settings, a: &ReproArgs) -> Result<(), CliError> {
    let experiment: Experiment = a.experiment.parse().map_err(|e: ExperimentError| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        CliError::Usage(format!("{e}; expected one of {}", names.join(", ")))
    })?;
    let manifests = experiments::run(experiment, &s.experiment_config())?;
    let mut failed = 0;
    for m in &manifests {
        println!(
            "{} ({:.1} s) -> {}",
            m.experiment,
            m.wall_time_s,
            manifest_path(&s.outdir, &m.experiment).display()
        );
        for c in &m.checks {
            println!("  {}", c.line());
            failed += usize::from(!c.passed);
        }
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn manifest_path(outdir: &Path, experiment: &str) -> PathBuf {
    outdir.join(experiment).join("manifest.json")
}
