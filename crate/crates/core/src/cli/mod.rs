//! Command-line front end. Every command reads one [`RunConfig`], writes its
//! payload files plus a `manifest.json` into the output directory, and maps
//! failures to exit code 1 (bad input) or 2 (numerical or I/O failure).

mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{parse_config, AxisConfig, RunConfig};

use crate::classify::{classify_trajectory, ClassifyError};
use crate::dynamics::{simulate, DynamicsError};
use crate::equilibria::{
    jacobian_eigenvalues, nullification_bifurcation, solve_steady_state, EquilibriumError, EquilibriumPoint,
};
use crate::netmodel::{HoiKind, Topology};
use crate::sweep::{
    existence_table, min_alpha_for_oscillation, oscillation_probability, sweep_beta_omega, xi_map, SweepError,
};
use output::{BifurcationRecord, EquilibriumRecord, SimulationRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const DOMAIN_ORDER_NOTE: &str =
    "grid domains assigned as beta in [-80, 0) and omega in [1e-3, 1e2) (caption read in (omega, beta) order)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", if path.is_empty() { String::new() } else { format!("{path}: ") })]
    Config { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::Io { .. } => EXIT_NUMERICAL,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Pool(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        match e {
            EquilibriumError::Domain { .. } | EquilibriumError::NoClosedForm(_) | EquilibriumError::InvalidAlpha(_) => {
                CliError::Invalid(e.to_string())
            }
            EquilibriumError::Dynamics(d) => d.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Sweep,
    XiMap,
    Equilibrium,
    Bifurcation,
    TableS1,
    MinAlpha,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Sweep,
        Command::XiMap,
        Command::Equilibrium,
        Command::Bifurcation,
        Command::TableS1,
        Command::MinAlpha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::XiMap => "xi-map",
            Command::Equilibrium => "equilibrium",
            Command::Bifurcation => "bifurcation",
            Command::TableS1 => "table-s1",
            Command::MinAlpha => "min-alpha",
        }
    }

    fn uses_grid(self) -> bool {
        matches!(self, Command::Sweep | Command::XiMap | Command::TableS1 | Command::MinAlpha)
    }
}

/// Files written by one run, manifest last.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Payload {
    files: Vec<(&'static str, String)>,
    summary: String,
}

/// Executes `command` and writes its files under `config.out`.
pub fn run(command: Command, config: &RunConfig) -> Result<RunReport, CliError> {
    config.validate()?;
    let payload = compute(command, config)?;
    let dir = Path::new(&config.out);
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    let mut write = |name: &str, text: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        files.push(path);
        Ok(())
    };
    for (name, text) in &payload.files {
        write(name, text)?;
    }
    let names: Vec<&str> = payload.files.iter().map(|(n, _)| *n).collect();
    write("manifest.json", &manifest(command, config, &names))?;
    Ok(RunReport {
        files,
        summary: payload.summary,
    })
}

/// The resolved configuration, tagged with the command and its outputs.
pub fn manifest(command: Command, config: &RunConfig, outputs: &[&str]) -> String {
    let mut resolved = config.clone();
    resolved.command = Some(command.name().to_string());
    let mut meta = match resolved.metadata.take() {
        Some(Value::Object(map)) => map,
        Some(other) => {
            let mut map = serde_json::Map::new();
            map.insert("user".into(), other);
            map
        }
        None => serde_json::Map::new(),
    };
    meta.insert("outputs".into(), json!(outputs));
    meta.insert("package_version".into(), json!(env!("CARGO_PKG_VERSION")));
    if command.uses_grid() {
        meta.insert("domain_order_assumption".into(), json!(DOMAIN_ORDER_NOTE));
    }
    resolved.metadata = Some(Value::Object(meta));
    output::json(&resolved)
}

fn compute(command: Command, config: &RunConfig) -> Result<Payload, CliError> {
    let base = config.integrator();
    let options = config.sweep_options();
    match command {
        Command::Simulate => {
            let spec = config.spec()?;
            let mut integ = base;
            integ.retain_samples = config.trajectory_samples;
            let traj = simulate(&spec, &integ, &config.initial_state(&spec))?;
            let outcome = classify_trajectory(&traj, &config.classify())?;
            let record = SimulationRecord {
                outcome: &outcome,
                termination: traj.termination,
                steps: traj.steps,
                t_final: traj.final_state.t,
            };
            Ok(Payload {
                summary: format!(
                    "{} with {} survivors ({})",
                    outcome.kind.name(),
                    outcome.survivors,
                    traj.termination.name()
                ),
                files: vec![
                    ("trajectory.csv", output::trajectory_csv(&spec, &traj)),
                    ("outcome.json", output::json(&record)),
                ],
            })
        }
        Command::Sweep => {
            let spec = config.spec()?;
            let grid = sweep_beta_omega(&spec, &config.inner_grid(), &base, &options)?;
            let xi = oscillation_probability(&grid);
            let errors = grid.cells.iter().filter(|c| c.outcome.is_err()).count();
            let summary = json!({
                "xi": xi,
                "limit_cycle_cells": grid.limit_cycle_count(),
                "cells": grid.cells.len(),
                "error_cells": errors,
            });
            Ok(Payload {
                summary: format!("xi = {xi} over {} cells", grid.cells.len()),
                files: vec![
                    ("heatmap.csv", output::heatmap_csv(&grid)),
                    ("sweep.json", output::json(&summary)),
                ],
            })
        }
        Command::XiMap => {
            let (ab, other) = config.alpha_axes();
            let map = xi_map(
                config.topology,
                config.hoi_kind,
                &ab,
                &other,
                &config.inner_grid(),
                &base,
                &options,
            )?;
            let max = map.xi.iter().cloned().fold(0.0, f64::max);
            Ok(Payload {
                summary: format!("{} pixels, max xi = {max}", map.xi.len()),
                files: vec![("xi_map.csv", output::xi_map_csv(&map))],
            })
        }
        Command::Equilibrium => {
            let spec = config.spec()?;
            let guess = EquilibriumPoint {
                n: vec![config.n0; spec.n_species],
                m: vec![config.m0; spec.hois.len()],
                residual_norm: f64::NAN,
            };
            let sol = solve_steady_state(&spec, config.omega, &guess, config.solver_tol)?;
            let report = jacobian_eigenvalues(&spec, config.omega, &sol.point)?;
            Ok(Payload {
                summary: format!(
                    "n = {:?}, m = {:?}, {}",
                    sol.point.n,
                    sol.point.m,
                    if report.is_stable() { "stable" } else { "unstable" }
                ),
                files: vec![(
                    "equilibrium.json",
                    output::json(&EquilibriumRecord::new(&sol.point, &report)),
                )],
            })
        }
        Command::Bifurcation => {
            let b = nullification_bifurcation(config.magnitudes().ab)?;
            Ok(Payload {
                summary: format!("beta* = {}", b.beta_star),
                files: vec![("bifurcation.json", output::json(&BifurcationRecord::new(&b)))],
            })
        }
        Command::TableS1 => {
            let table = existence_table(&config.probes(), |k| config.inner_grid_for(k), &base, &options)?;
            let yes = table.rows.iter().filter(|r| r.oscillates).count();
            Ok(Payload {
                summary: format!("{yes} of {} combinations oscillate", table.rows.len()),
                files: vec![
                    ("table_s1.csv", output::table_csv(&table)),
                    ("table_s1.json", output::json(&table)),
                ],
            })
        }
        Command::MinAlpha => {
            let r = min_alpha_for_oscillation(
                config.topology,
                config.hoi_kind,
                &config.inner_grid(),
                config.bracket,
                config.bisection_tol,
                &base,
                &options,
            )?;
            Ok(Payload {
                summary: format!("alpha_min = {} (bracket [{}, {}])", r.alpha_min, r.lo, r.hi),
                files: vec![("min_alpha.json", output::json(&r))],
            })
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hoispeed", version, about = "Lotka-Volterra networks with finite-speed interaction modifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Integrate one system and classify its long-run behaviour.
    Simulate(Flags),
    /// Classify every cell of a (beta, omega) grid.
    Sweep(Flags),
    /// Oscillation probability over alpha_AB against alpha_AC = alpha_BC.
    XiMap(Flags),
    /// Interior steady state and its Jacobian spectrum.
    Equilibrium(Flags),
    /// Strength at which the equilibrium modifier crosses zero.
    Bifurcation(Flags),
    /// Oscillation existence over all 36 system variants.
    #[command(name = "table-s1")]
    TableS1(Flags),
    /// Bisection for the weakest interaction that oscillates.
    MinAlpha(Flags),
}

impl CommandArgs {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            CommandArgs::Simulate(f) => (Command::Simulate, f),
            CommandArgs::Sweep(f) => (Command::Sweep, f),
            CommandArgs::XiMap(f) => (Command::XiMap, f),
            CommandArgs::Equilibrium(f) => (Command::Equilibrium, f),
            CommandArgs::Bifurcation(f) => (Command::Bifurcation, f),
            CommandArgs::TableS1(f) => (Command::TableS1, f),
            CommandArgs::MinAlpha(f) => (Command::MinAlpha, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GridPreset {
    /// 27 strengths by 17 speeds.
    Standard,
    /// 9 strengths by 7 speeds.
    Coarse,
}

/// Flags override values read from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON configuration file (a previous manifest.json works).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// transitive-a | transitive-b | transitive-c | intransitive
    #[arg(long)]
    pub topology: Option<String>,
    /// sym | asym-ab | asym-ba
    #[arg(long)]
    pub hoi: Option<String>,
    /// Shared magnitude of all pairwise interactions.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_ab: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_ac: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_bc: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Run length in time units.
    #[arg(long, allow_hyphen_values = true)]
    pub horizon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub extinction_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub grid: Option<GridPreset>,
    /// Worker threads for grids; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
}

/// Reads `--config` (if any), applies flag overrides and validates.
pub fn resolve_config(flags: &Flags) -> Result<RunConfig, CliError> {
    let mut config = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = &flags.topology {
        config.topology = t
            .parse::<Topology>()
            .map_err(|e| CliError::Config {
                path: "topology".into(),
                message: e.to_string(),
            })?;
    }
    if let Some(k) = &flags.hoi {
        config.hoi_kind = k.parse::<HoiKind>().map_err(|e| CliError::Config {
            path: "hoi_kind".into(),
            message: e.to_string(),
        })?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = flags.$field {
                config.$field = v;
            }
        )*};
    }
    set!(alpha, beta, omega, dt, extinction_threshold, workers);
    if flags.alpha_ab.is_some() {
        config.alpha_ab = flags.alpha_ab;
    }
    if flags.alpha_ac.is_some() {
        config.alpha_ac = flags.alpha_ac;
    }
    if flags.alpha_bc.is_some() {
        config.alpha_bc = flags.alpha_bc;
    }
    if flags.horizon.is_some() {
        config.horizon = flags.horizon;
    }
    if let Some(out) = &flags.out {
        config.out = out.clone();
    }
    match flags.grid {
        Some(GridPreset::Standard) => (config.beta_count, config.omega_count) = (27, 17),
        Some(GridPreset::Coarse) => (config.beta_count, config.omega_count) = (9, 7),
        None => {}
    }
    config.validate()?;
    Ok(config)
}

/// Parses arguments, runs, reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = cli.command.split();
    let result = resolve_config(flags).and_then(|config| run(command, &config));
    match result {
        Ok(report) => {
            println!("{}: {}", command.name(), report.summary);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
