#![allow(dead_code)]

use std::fs;
use std::path::Path;

use hoispeed::classify::{classify_trajectory, ClassifyConfig, Outcome};
use hoispeed::cli::{self, parse_config, Command, RunConfig};
use hoispeed::dynamics::{simulate, IntegratorConfig, SystemState};
use hoispeed::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, SystemSpec, Topology};

/// The five reference points as `(omega, beta)`.
pub const FIG3_POINTS: [(f64, f64); 5] = [(0.1, -3.0), (1.0, -3.0), (10.0, -3.0), (1.0, -7.0), (1.0, -12.0)];

pub fn intransitive_sym(alpha: f64) -> SystemSpec {
    build_canonical(Topology::Intransitive, HoiKind::Symmetric, AlphaMagnitudes::identical(alpha)).unwrap()
}

/// Simulates from the standard state and classifies, keeping a bounded tail.
pub fn run_point(spec: &SystemSpec, omega: f64, beta: f64, base: &IntegratorConfig) -> Outcome {
    let spec = spec.clone().with_beta(beta);
    let mut config = base.clone();
    config.omega = omega;
    config.retain_samples = Some(200_000);
    let traj = simulate(&spec, &config, &SystemState::standard(&spec)).unwrap();
    classify_trajectory(&traj, &ClassifyConfig::default()).unwrap()
}

/// Runs `command`, replays it from the written manifest into a second
/// directory and compares every payload file byte for byte.
pub fn manifest_replay(command: Command, mut config: RunConfig, root: &Path) -> Result<(), String> {
    let first = root.join(format!("{}-first", command.name()));
    let second = root.join(format!("{}-second", command.name()));
    config.out = first.to_string_lossy().into_owned();
    let report = cli::run(command, &config).map_err(|e| e.to_string())?;
    let manifest = fs::read_to_string(first.join("manifest.json")).map_err(|e| e.to_string())?;
    let mut replay = parse_config(&manifest).map_err(|e| format!("manifest does not parse: {e}"))?;
    replay.out = second.to_string_lossy().into_owned();
    cli::run(command, &replay).map_err(|e| e.to_string())?;
    for path in &report.files {
        let name = path.file_name().unwrap();
        if name == "manifest.json" {
            continue;
        }
        let a = fs::read(path).map_err(|e| e.to_string())?;
        let b = fs::read(second.join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{} differs on replay", name.to_string_lossy()));
        }
    }
    let m2 = fs::read_to_string(second.join("manifest.json")).map_err(|e| e.to_string())?;
    let strip = |s: &str| s.lines().filter(|l| !l.contains("\"out\"")).collect::<Vec<_>>().join("\n");
    if strip(&manifest) != strip(&m2) {
        return Err("manifest changed on replay".into());
    }
    Ok(())
}

/// Small, fast settings for replay checks of each command.
pub fn replay_config(command: Command) -> RunConfig {
    let mut c = RunConfig::default();
    match command {
        Command::Simulate => c.horizon = Some(50.0),
        Command::Sweep | Command::XiMap | Command::TableS1 => {
            c.horizon = Some(20.0);
            c.beta_count = 3;
            c.omega_count = 2;
            c.alpha_ab_axis = cli::AxisConfig {
                lo: 1.0,
                hi: 3.0,
                count: 2,
            };
            c.alpha_other_axis = c.alpha_ab_axis;
            c.probe_distinguished = vec![2.0];
            c.probe_other = vec![2.0];
            c.workers = 2;
        }
        Command::MinAlpha => {
            // A single cell at (omega, beta) = (1, -3), which oscillates at
            // alpha = 2 and not at alpha = 1.
            c.beta_lo = Some(-3.0);
            c.beta_count = 1;
            c.omega_lo = 1.0;
            c.omega_hi = 10.0;
            c.omega_count = 1;
            c.bracket = (1.0, 2.0);
            c.bisection_tol = 0.25;
        }
        Command::Equilibrium => {
            c.hoi_kind = HoiKind::AsymAffectedFirst;
            c.alpha = 1.0;
            c.beta = -2.0;
        }
        Command::Bifurcation => {}
    }
    c
}
