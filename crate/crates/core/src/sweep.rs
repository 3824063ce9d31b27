//! Parameter grids over modification strength and speed, oscillation
//! probabilities, the existence table over all 36 system variants, and the
//! bisection search for the weakest interaction that still oscillates.
//!
//! Every cell starts from the standard state (all abundances and modifiers
//! at 1) and is classified independently, so grids are embarrassingly
//! parallel. Results are collected by cell index and do not depend on the
//! number of workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify_trajectory, ClassifyConfig, Outcome, OutcomeKind};
use crate::dynamics::{simulate, IntegratorConfig, SystemState};
use crate::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, ModelError, SystemSpec, Topology};

/// Trailing samples kept per cell for classification.
pub const DEFAULT_WINDOW_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("axis '{name}': {reason}")]
    Axis { name: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("invalid sweep setting: {0}")]
    Setting(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Half-open axis `[lo, hi)` split into `count` cells; points sit at the low
/// edge of each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn linear(name: &str, lo: f64, hi: f64, count: usize) -> Self {
        Self {
            name: name.to_string(),
            spacing: Spacing::Linear,
            lo,
            hi,
            count,
        }
    }

    pub fn log(name: &str, lo: f64, hi: f64, count: usize) -> Self {
        Self {
            name: name.to_string(),
            spacing: Spacing::Log,
            lo,
            hi,
            count,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let fail = |reason: &str| {
            Err(SweepError::Axis {
                name: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.count == 0 {
            return fail("count must be at least 1");
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return fail("bounds must be finite");
        }
        if !(self.lo < self.hi) {
            return fail("lo must be below hi");
        }
        if self.spacing == Spacing::Log && !(self.lo > 0.0) {
            return fail("logarithmic axis needs lo > 0");
        }
        Ok(())
    }

    pub fn point(&self, i: usize) -> f64 {
        let frac = i as f64 / self.count as f64;
        match self.spacing {
            Spacing::Linear => self.lo + frac * (self.hi - self.lo),
            Spacing::Log => {
                let (a, b) = (self.lo.log10(), self.hi.log10());
                10f64.powf(a + frac * (b - a))
            }
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

/// The (strength, speed) plane explored for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerGrid {
    pub beta: GridAxis,
    pub omega: GridAxis,
}

impl InnerGrid {
    /// 27 strengths over `[-80, 0)` (or `[0, 80)` when only the negative
    /// side of the pair is modified) by 17 log-spaced speeds over
    /// `[1e-3, 1e2)`.
    pub fn standard(kind: HoiKind) -> Self {
        Self::with_counts(kind, 27, 17)
    }

    /// 9 x 7 desk-scale grid over the same domains.
    pub fn coarse(kind: HoiKind) -> Self {
        Self::with_counts(kind, 9, 7)
    }

    pub fn with_counts(kind: HoiKind, beta_count: usize, omega_count: usize) -> Self {
        let (lo, hi) = beta_domain(kind);
        Self {
            beta: GridAxis::linear("beta", lo, hi, beta_count),
            omega: GridAxis::log("omega", 1e-3, 1e2, omega_count),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.beta.validate()?;
        self.omega.validate()
    }

    pub fn len(&self) -> usize {
        self.beta.count * self.omega.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(beta, omega)` for a flat cell index (strength-major).
    pub fn cell_params(&self, index: usize) -> (f64, f64) {
        let (ib, iw) = (index / self.omega.count, index % self.omega.count);
        (self.beta.point(ib), self.omega.point(iw))
    }
}

/// Strength domain for a modification kind. Modifying only the negative side
/// of the pair with negative strength turns it positive and grows without
/// bound, so that kind is explored over positive strengths.
pub fn beta_domain(kind: HoiKind) -> (f64, f64) {
    match kind {
        HoiKind::AsymAffectedSecond => (0.0, 80.0),
        _ => (-80.0, 0.0),
    }
}

/// Execution settings shared by all sweep operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    pub classify: ClassifyConfig,
    pub window_cap: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            classify: ClassifyConfig::default(),
            window_cap: DEFAULT_WINDOW_CAP,
        }
    }
}

impl SweepOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, SweepError> {
        if self.window_cap < 3 {
            return Err(SweepError::Setting("window_cap must be at least 3".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub beta: f64,
    pub omega: f64,
    /// Per-cell failures are recorded here instead of aborting the grid.
    pub outcome: Result<Outcome, String>,
}

impl Cell {
    pub fn is_limit_cycle(&self) -> bool {
        matches!(&self.outcome, Ok(o) if o.kind == OutcomeKind::LimitCycle)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    pub beta_axis: GridAxis,
    pub omega_axis: GridAxis,
    /// Strength-major: index `ib * omega_axis.count + iw`.
    pub cells: Vec<Cell>,
    pub spec: SystemSpec,
}

impl OutcomeGrid {
    pub fn cell(&self, ib: usize, iw: usize) -> &Cell {
        &self.cells[ib * self.omega_axis.count + iw]
    }

    pub fn limit_cycle_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_limit_cycle()).count()
    }
}

/// Simulates and classifies one `(beta, omega)` point.
pub fn run_cell(
    spec: &SystemSpec,
    beta: f64,
    omega: f64,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<Outcome, String> {
    let mut local = spec.clone();
    local.set_beta(beta);
    let mut config = base.clone();
    config.omega = omega;
    config.retain_samples = Some(options.window_cap);
    let traj = simulate(&local, &config, &SystemState::standard(&local)).map_err(|e| e.to_string())?;
    classify_trajectory(&traj, &options.classify).map_err(|e| e.to_string())
}

pub fn sweep_beta_omega(
    spec: &SystemSpec,
    inner: &InnerGrid,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<OutcomeGrid, SweepError> {
    inner.validate()?;
    spec.ensure_valid()?;
    let pool = options.pool()?;
    let cells = pool.install(|| {
        (0..inner.len())
            .into_par_iter()
            .map(|index| {
                let (beta, omega) = inner.cell_params(index);
                Cell {
                    beta,
                    omega,
                    outcome: run_cell(spec, beta, omega, base, options),
                }
            })
            .collect()
    });
    Ok(OutcomeGrid {
        beta_axis: inner.beta.clone(),
        omega_axis: inner.omega.clone(),
        cells,
        spec: spec.clone(),
    })
}

/// Fraction of cells that settle on a limit cycle.
pub fn oscillation_probability(grid: &OutcomeGrid) -> f64 {
    if grid.cells.is_empty() {
        return 0.0;
    }
    grid.limit_cycle_count() as f64 / grid.cells.len() as f64
}

/// Whether any cell of the inner grid oscillates; stops at the first hit.
pub fn any_oscillation(
    spec: &SystemSpec,
    inner: &InnerGrid,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<bool, SweepError> {
    inner.validate()?;
    spec.ensure_valid()?;
    let pool = options.pool()?;
    Ok(pool.install(|| {
        (0..inner.len()).into_par_iter().any(|index| {
            let (beta, omega) = inner.cell_params(index);
            matches!(run_cell(spec, beta, omega, base, options), Ok(o) if o.kind == OutcomeKind::LimitCycle)
        })
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiMap {
    pub topology: Topology,
    pub kind: HoiKind,
    pub alpha_ab_axis: GridAxis,
    pub alpha_other_axis: GridAxis,
    /// `alpha_ab`-major: index `ia * alpha_other_axis.count + io`.
    pub xi: Vec<f64>,
    pub inner: InnerGrid,
}

impl XiMap {
    pub fn get(&self, ia: usize, io: usize) -> f64 {
        self.xi[ia * self.alpha_other_axis.count + io]
    }
}

/// Oscillation probability over a grid of `alpha_ab` against
/// `alpha_ac = alpha_bc`.
pub fn xi_map(
    topology: Topology,
    kind: HoiKind,
    alpha_ab_axis: &GridAxis,
    alpha_other_axis: &GridAxis,
    inner: &InnerGrid,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<XiMap, SweepError> {
    alpha_ab_axis.validate()?;
    alpha_other_axis.validate()?;
    let mut xi = Vec::with_capacity(alpha_ab_axis.count * alpha_other_axis.count);
    for ab in alpha_ab_axis.points() {
        for other in alpha_other_axis.points() {
            let spec = build_canonical(
                topology,
                kind,
                AlphaMagnitudes {
                    ab,
                    ac: other,
                    bc: other,
                },
            )?;
            let grid = sweep_beta_omega(&spec, inner, base, options)?;
            xi.push(oscillation_probability(&grid));
        }
    }
    Ok(XiMap {
        topology,
        kind,
        alpha_ab_axis: alpha_ab_axis.clone(),
        alpha_other_axis: alpha_other_axis.clone(),
        xi,
        inner: inner.clone(),
    })
}

/// The pairwise interaction whose magnitude differs from the other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistinguishedPair {
    #[serde(rename = "AB")]
    Ab,
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "BC")]
    Bc,
}

impl DistinguishedPair {
    pub const ALL: [DistinguishedPair; 3] = [DistinguishedPair::Ab, DistinguishedPair::Ac, DistinguishedPair::Bc];

    pub fn name(self) -> &'static str {
        match self {
            DistinguishedPair::Ab => "AB",
            DistinguishedPair::Ac => "AC",
            DistinguishedPair::Bc => "BC",
        }
    }

    pub fn magnitudes(self, distinguished: f64, other: f64) -> AlphaMagnitudes {
        let mut m = AlphaMagnitudes::identical(other);
        match self {
            DistinguishedPair::Ab => m.ab = distinguished,
            DistinguishedPair::Ac => m.ac = distinguished,
            DistinguishedPair::Bc => m.bc = distinguished,
        }
        m
    }
}

impl fmt::Display for DistinguishedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistinguishedPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DistinguishedPair::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown pair '{s}' (expected AB|AC|BC)"))
    }
}

/// Magnitudes probed per existence-table row: every combination of one
/// distinguished value with one value shared by the other two pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceProbes {
    pub distinguished: Vec<f64>,
    pub other: Vec<f64>,
}

impl Default for ExistenceProbes {
    fn default() -> Self {
        Self {
            distinguished: vec![0.5, 1.5, 2.0, 3.0],
            other: vec![0.5, 0.8, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceRow {
    pub topology: Topology,
    pub kind: HoiKind,
    pub pair: DistinguishedPair,
    pub oscillates: bool,
    /// The first `(distinguished, other)` probe that oscillated.
    pub witness: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceTable {
    pub rows: Vec<ExistenceRow>,
    pub probes: ExistenceProbes,
}

impl ExistenceTable {
    pub fn row(&self, topology: Topology, kind: HoiKind, pair: DistinguishedPair) -> Option<&ExistenceRow> {
        self.rows
            .iter()
            .find(|r| r.topology == topology && r.kind == kind && r.pair == pair)
    }
}

/// Decides one existence-table row by probing magnitudes in order until a
/// limit cycle appears.
pub fn existence_row(
    topology: Topology,
    kind: HoiKind,
    pair: DistinguishedPair,
    probes: &ExistenceProbes,
    inner: &InnerGrid,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<ExistenceRow, SweepError> {
    for &d in &probes.distinguished {
        for &o in &probes.other {
            let spec = build_canonical(topology, kind, pair.magnitudes(d, o))?;
            if any_oscillation(&spec, inner, base, options)? {
                return Ok(ExistenceRow {
                    topology,
                    kind,
                    pair,
                    oscillates: true,
                    witness: Some((d, o)),
                });
            }
        }
    }
    Ok(ExistenceRow {
        topology,
        kind,
        pair,
        oscillates: false,
        witness: None,
    })
}

/// All 36 rows. `inner_for` supplies the (strength, speed) grid per kind,
/// typically [`InnerGrid::coarse`] or [`InnerGrid::standard`].
pub fn existence_table(
    probes: &ExistenceProbes,
    inner_for: impl Fn(HoiKind) -> InnerGrid,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<ExistenceTable, SweepError> {
    if probes.distinguished.is_empty() || probes.other.is_empty() {
        return Err(SweepError::Setting("probe sets must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(36);
    for topology in Topology::ALL {
        for kind in HoiKind::ALL {
            let inner = inner_for(kind);
            for pair in DistinguishedPair::ALL {
                rows.push(existence_row(topology, kind, pair, probes, &inner, base, options)?);
            }
        }
    }
    Ok(ExistenceTable {
        rows,
        probes: probes.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinAlpha {
    /// Midpoint of the final bracket.
    pub alpha_min: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

/// Bisection on identical magnitudes for the smallest value at which some
/// inner-grid cell oscillates.
#[allow(clippy::too_many_arguments)]
pub fn min_alpha_for_oscillation(
    topology: Topology,
    kind: HoiKind,
    inner: &InnerGrid,
    bracket: (f64, f64),
    tol: f64,
    base: &IntegratorConfig,
    options: &SweepOptions,
) -> Result<MinAlpha, SweepError> {
    let (mut lo, mut hi) = bracket;
    let invalid = |reason: &str| SweepError::InvalidBracket {
        lo: bracket.0,
        hi: bracket.1,
        reason: reason.to_string(),
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid("need finite lo < hi"));
    }
    if !(tol > 0.0) {
        return Err(SweepError::Setting("tol must be positive".into()));
    }
    let oscillates = |alpha: f64| -> Result<bool, SweepError> {
        let spec = build_canonical(topology, kind, AlphaMagnitudes::identical(alpha))?;
        any_oscillation(&spec, inner, base, options)
    };
    if oscillates(lo)? {
        return Err(invalid("lower end already oscillates"));
    }
    if !oscillates(hi)? {
        return Err(invalid("upper end does not oscillate"));
    }
    let mut evaluations = 2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if oscillates(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        evaluations += 1;
    }
    Ok(MinAlpha {
        alpha_min: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}
