//! File formats: CSV for trajectories and grids, JSON for everything else.

use std::fmt::Write as _;

use serde::Serialize;

use crate::classify::Outcome;
use crate::dynamics::{Termination, Trajectory};
use crate::equilibria::{EquilibriumPoint, Nullification, StabilityReport};
use crate::netmodel::{species_name, SystemSpec};
use crate::sweep::{ExistenceTable, OutcomeGrid, XiMap};

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// `t,n_A,n_B,n_C,m_AB,...` at full precision, closed by a
/// `# termination=<reason>` line.
pub fn trajectory_csv(spec: &SystemSpec, traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for i in 0..traj.n_species() {
        write!(out, ",n_{}", species_name(i)).unwrap();
    }
    for h in &spec.hois {
        write!(out, ",{}", h.column_name()).unwrap();
    }
    out.push('\n');
    for s in traj.samples() {
        write!(out, "{:.16e}", s.t).unwrap();
        for v in s.n.iter().chain(s.m) {
            write!(out, ",{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "# termination={}", traj.termination.name()).unwrap();
    out
}

#[derive(Serialize)]
pub struct SimulationRecord<'a> {
    #[serde(flatten)]
    pub outcome: &'a Outcome,
    pub termination: Termination,
    pub steps: u64,
    pub t_final: f64,
}

pub fn heatmap_csv(grid: &OutcomeGrid) -> String {
    let mut out = String::from("beta,omega,kind,survivors,amplitude,period\n");
    for cell in &grid.cells {
        match &cell.outcome {
            Ok(o) => writeln!(
                out,
                "{},{},{},{},{},{}",
                cell.beta,
                cell.omega,
                o.kind.name(),
                o.survivors,
                opt(o.amplitude()),
                opt(o.period())
            ),
            Err(_) => writeln!(out, "{},{},error,,,", cell.beta, cell.omega),
        }
        .unwrap();
    }
    out
}

pub fn xi_map_csv(map: &XiMap) -> String {
    let mut out = String::from("alpha_ab,alpha_other,xi\n");
    for (ia, ab) in map.alpha_ab_axis.points().into_iter().enumerate() {
        for (io, other) in map.alpha_other_axis.points().into_iter().enumerate() {
            writeln!(out, "{ab},{other},{}", map.get(ia, io)).unwrap();
        }
    }
    out
}

pub fn table_csv(table: &ExistenceTable) -> String {
    let mut out = String::from("topology,hoi_kind,distinguished_pair,oscillates\n");
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.topology,
            r.kind,
            r.pair,
            if r.oscillates { "yes" } else { "no" }
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
pub struct EquilibriumRecord<'a> {
    pub n: &'a [f64],
    pub m: &'a [f64],
    pub residual: f64,
    pub eigenvalues: &'a [crate::equilibria::Eigenvalue],
    pub max_real_part: f64,
    pub stable: bool,
}

impl<'a> EquilibriumRecord<'a> {
    pub fn new(point: &'a EquilibriumPoint, report: &'a StabilityReport) -> Self {
        Self {
            n: &point.n,
            m: &point.m,
            residual: point.residual_norm,
            eigenvalues: &report.eigenvalues,
            max_real_part: report.max_real_part,
            stable: report.is_stable(),
        }
    }
}

#[derive(Serialize)]
pub struct BifurcationRecord<'a> {
    pub alpha: f64,
    pub beta_star: f64,
    pub n: &'a [f64],
    pub m: &'a [f64],
    pub residual: f64,
}

impl<'a> BifurcationRecord<'a> {
    pub fn new(b: &'a Nullification) -> Self {
        Self {
            alpha: b.alpha,
            beta_star: b.beta_star,
            n: &b.point.n,
            m: &b.point.m,
            residual: b.point.residual_norm,
        }
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    text
}
