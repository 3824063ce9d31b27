//! Right-hand sides and the fixed-step Euler integrator.
//!
//! Abundances follow `dn_i = n_i (1 - n_i + sum_j alpha_ij m_ij n_j)` where
//! `m_ij` is the modifier attached to `(i, j)` or exactly 1 for unmodified
//! pairs. Each modifier relaxes as `dm = omega (1 - m + beta n_k)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::SystemSpec;

pub const DEFAULT_DT: f64 = 3e-3;
pub const DEFAULT_EXTINCTION_THRESHOLD: f64 = 1e-7;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-4;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 100;
pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e6;
/// Abundances beyond `DEFAULT_RESOLUTION_FACTOR / dt` count as divergent:
/// a fixed Euler step cannot follow growth past a scale set by `1 / dt`, and
/// runaway trajectories otherwise overshoot to zero and look extinct.
pub const DEFAULT_RESOLUTION_FACTOR: f64 = 0.1;
pub const DEFAULT_SAMPLE_STRIDE: u64 = 100;
/// Base run length; divided by omega when omega < 1.
pub const HORIZON_BASE: f64 = 10_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite {what}[{index}] = {value}")]
    NonFinite {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("negative abundance n[{index}] = {value}")]
    NegativeAbundance { index: usize, value: f64 },
    #[error("state has {found} {what} entries, system expects {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid integrator configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub n: Vec<f64>,
    pub m: Vec<f64>,
    pub t: f64,
}

impl SystemState {
    /// All abundances 1 and all modifiers 1: the unmodified equilibrium.
    pub fn standard(spec: &SystemSpec) -> Self {
        Self {
            n: vec![1.0; spec.n_species],
            m: vec![1.0; spec.hois.len()],
            t: 0.0,
        }
    }

    pub fn check_against(&self, spec: &SystemSpec) -> Result<(), DynamicsError> {
        if self.n.len() != spec.n_species {
            return Err(DynamicsError::Dimension {
                what: "abundance",
                expected: spec.n_species,
                found: self.n.len(),
            });
        }
        if self.m.len() != spec.hois.len() {
            return Err(DynamicsError::Dimension {
                what: "modifier",
                expected: spec.hois.len(),
                found: self.m.len(),
            });
        }
        check_finite("n", &self.n)?;
        check_finite("m", &self.m)?;
        if let Some((index, &value)) = self.n.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(DynamicsError::NegativeAbundance { index, value });
        }
        Ok(())
    }
}

fn check_finite(what: &'static str, values: &[f64]) -> Result<(), DynamicsError> {
    match values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((index, &value)) => Err(DynamicsError::NonFinite { what, index, value }),
        None => Ok(()),
    }
}

/// How the default horizon is derived from omega when none is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonRule {
    /// `10 000` time units, or `10 000 / omega` for omega < 1.
    #[default]
    TimeUnits,
    /// `10 000` Euler steps, or `10 000 / omega` steps for omega < 1.
    Steps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub omega: f64,
    pub extinction_threshold: f64,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    /// Explicit run length in time units; `None` applies `horizon_rule`.
    pub horizon: Option<f64>,
    pub horizon_rule: HorizonRule,
    pub divergence_cap: f64,
    /// Step-resolved ceiling `resolution_factor / dt`; 0 disables it.
    pub resolution_factor: f64,
    pub sample_stride: u64,
    /// Keep only this many trailing samples (plus the final state).
    pub retain_samples: Option<usize>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            omega: 1.0,
            extinction_threshold: DEFAULT_EXTINCTION_THRESHOLD,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            horizon: None,
            horizon_rule: HorizonRule::TimeUnits,
            divergence_cap: DEFAULT_DIVERGENCE_CAP,
            resolution_factor: DEFAULT_RESOLUTION_FACTOR,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
            retain_samples: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_omega(omega: f64) -> Self {
        Self {
            omega,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::Config(msg.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return bad("omega must be non-negative and finite");
        }
        if !(self.extinction_threshold > 0.0) {
            return bad("extinction_threshold must be positive");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        if self.convergence_window == 0 {
            return bad("convergence_window must be at least 1");
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad("horizon must be positive");
            }
        } else if self.omega == 0.0 {
            return bad("omega = 0 requires an explicit horizon");
        }
        if !(self.divergence_cap > 1.0) {
            return bad("divergence_cap must exceed 1");
        }
        if !(self.resolution_factor >= 0.0 && self.resolution_factor.is_finite()) {
            return bad("resolution_factor must be finite and non-negative");
        }
        if !(self.effective_cap() > 1.0) {
            return bad("resolution_factor / dt must exceed 1");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be at least 1");
        }
        if self.retain_samples == Some(0) {
            return bad("retain_samples must be at least 1");
        }
        Ok(())
    }

    /// Abundance at which a run is declared divergent.
    pub fn effective_cap(&self) -> f64 {
        if self.resolution_factor > 0.0 {
            self.divergence_cap.min(self.resolution_factor / self.dt)
        } else {
            self.divergence_cap
        }
    }

    /// Run length in time units.
    pub fn resolved_horizon(&self) -> f64 {
        if let Some(h) = self.horizon {
            return h;
        }
        let base = if self.omega < 1.0 {
            HORIZON_BASE / self.omega
        } else {
            HORIZON_BASE
        };
        match self.horizon_rule {
            HorizonRule::TimeUnits => base,
            HorizonRule::Steps => base * self.dt,
        }
    }

    pub fn total_steps(&self) -> u64 {
        let raw = self.resolved_horizon() / self.dt;
        (raw - 1e-9).ceil().max(1.0) as u64
    }

    /// Same run with the step halved and the sample stride doubled, so that
    /// sampling times line up.
    pub fn with_half_step(&self) -> Self {
        let mut half = self.clone();
        half.dt = self.dt / 2.0;
        half.sample_stride = self.sample_stride * 2;
        if self.horizon.is_none() && self.horizon_rule == HorizonRule::Steps {
            half.horizon = Some(self.resolved_horizon());
        }
        half
    }
}

/// Evaluation of the vector field into caller-owned buffers.
trait Field {
    fn eval(&self, n: &[f64], m: &[f64], dn: &mut [f64], dm: &mut [f64]);
}

/// Coefficient entries multiplied by a modifier, precomputed for speed.
struct Prepared<'a> {
    spec: &'a SystemSpec,
    /// `(flat index into alpha, modifier index)`
    targets: Vec<(usize, usize)>,
}

impl<'a> Prepared<'a> {
    fn new(spec: &'a SystemSpec) -> Self {
        let n = spec.n_species;
        let targets = spec
            .hois
            .iter()
            .enumerate()
            .flat_map(|(h, hoi)| hoi.targets().map(move |(i, j)| (i * n + j, h)))
            .collect();
        Self { spec, targets }
    }

    #[inline]
    fn abundance_rates(&self, n: &[f64], modifiers: &[f64], dn: &mut [f64]) {
        self.growth_rates(n, modifiers, dn);
        for (d, &x) in dn.iter_mut().zip(n) {
            *d *= x;
        }
    }

    /// Per-capita growth `1 - n_i + sum_j alpha_ij m_ij n_j`.
    #[inline]
    fn growth_rates(&self, n: &[f64], modifiers: &[f64], growth_out: &mut [f64]) {
        let ns = self.spec.n_species;
        let mut coeff = [0.0f64; 16];
        let mut heap;
        let coeff: &mut [f64] = if ns * ns <= coeff.len() {
            &mut coeff[..ns * ns]
        } else {
            heap = vec![0.0; ns * ns];
            &mut heap
        };
        coeff.copy_from_slice(&self.spec.alpha);
        for &(idx, h) in &self.targets {
            coeff[idx] = self.spec.alpha[idx] * modifiers[h];
        }
        for i in 0..ns {
            let row = &coeff[i * ns..(i + 1) * ns];
            let mut growth = 1.0 - n[i];
            for j in 0..ns {
                if j != i {
                    growth += row[j] * n[j];
                }
            }
            growth_out[i] = growth;
        }
    }
}

struct ModifierField<'a> {
    prep: Prepared<'a>,
    omega: f64,
}

impl Field for ModifierField<'_> {
    #[inline]
    fn eval(&self, n: &[f64], m: &[f64], dn: &mut [f64], dm: &mut [f64]) {
        self.prep.abundance_rates(n, m, dn);
        for (h, hoi) in self.prep.spec.hois.iter().enumerate() {
            dm[h] = self.omega * (1.0 - m[h] + hoi.beta * n[hoi.modifier]);
        }
    }
}

struct FrozenField<'a> {
    prep: Prepared<'a>,
    frozen: &'a [f64],
}

impl Field for FrozenField<'_> {
    #[inline]
    fn eval(&self, n: &[f64], _m: &[f64], dn: &mut [f64], dm: &mut [f64]) {
        self.prep.abundance_rates(n, self.frozen, dn);
        dm.fill(0.0);
    }
}

/// Time derivatives of abundances and modifiers.
pub fn rhs(
    spec: &SystemSpec,
    state: &SystemState,
    omega: f64,
) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
    state.check_against(spec)?;
    Ok(rates_unchecked(spec, &state.n, &state.m, omega))
}

/// The modifier-model vector field without state validation; shared with
/// the steady-state solver.
pub(crate) fn rates_unchecked(
    spec: &SystemSpec,
    n: &[f64],
    m: &[f64],
    omega: f64,
) -> (Vec<f64>, Vec<f64>) {
    let field = ModifierField {
        prep: Prepared::new(spec),
        omega,
    };
    let mut dn = vec![0.0; spec.n_species];
    let mut dm = vec![0.0; spec.hois.len()];
    field.eval(n, m, &mut dn, &mut dm);
    (dn, dm)
}

/// Per-capita growth rates and modifier rates, without state validation.
pub(crate) fn growth_unchecked(
    spec: &SystemSpec,
    n: &[f64],
    m: &[f64],
    omega: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (_, dm) = rates_unchecked(spec, n, m, omega);
    let mut growth = vec![0.0; spec.n_species];
    Prepared::new(spec).growth_rates(n, m, &mut growth);
    (growth, dm)
}

/// Pairwise model with every modifier held at a fixed value.
pub fn glvm_rhs(spec: &SystemSpec, n: &[f64], m_frozen: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let state = SystemState {
        n: n.to_vec(),
        m: m_frozen.to_vec(),
        t: 0.0,
    };
    state.check_against(spec)?;
    let mut dn = vec![0.0; spec.n_species];
    Prepared::new(spec).abundance_rates(n, m_frozen, &mut dn);
    Ok(dn)
}

/// Instantaneous model: each modified entry gains the term
/// `alpha_ij * beta * n_j * n_k` on top of the pairwise sum.
pub fn simple_hoi_rhs(spec: &SystemSpec, n: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let modifiers = vec![1.0; spec.hois.len()];
    let mut dn = glvm_rhs(spec, n, &modifiers)?;
    let ns = spec.n_species;
    let mut higher = vec![0.0; ns];
    for hoi in &spec.hois {
        for (i, j) in hoi.targets() {
            higher[i] += spec.alpha(i, j) * hoi.beta * n[j] * n[hoi.modifier];
        }
    }
    for i in 0..ns {
        dn[i] += n[i] * higher[i];
    }
    Ok(dn)
}

/// Stationary modifier value `1 + beta n_k`.
#[inline]
pub fn modifier_equilibrium(beta: f64, n_k: f64) -> f64 {
    1.0 + beta * n_k
}

/// True when `sum |dn_i| < tol` (strict).
#[inline]
pub fn detect_convergence(dn: &[f64], tol: f64) -> bool {
    dn.iter().map(|d| d.abs()).sum::<f64>() < tol
}

#[inline]
fn apply_euler(
    n: &mut [f64],
    m: &mut [f64],
    dn: &[f64],
    dm: &[f64],
    dt: f64,
    extinction_threshold: f64,
) {
    for (x, d) in n.iter_mut().zip(dn) {
        *x += dt * d;
        if *x <= extinction_threshold {
            *x = 0.0;
        }
    }
    for (x, d) in m.iter_mut().zip(dm) {
        *x += dt * d;
    }
}

/// One Euler step followed by extinction clamping.
pub fn euler_step(
    spec: &SystemSpec,
    state: &SystemState,
    config: &IntegratorConfig,
) -> Result<SystemState, DynamicsError> {
    let (dn, dm) = rhs(spec, state, config.omega)?;
    let mut next = state.clone();
    apply_euler(
        &mut next.n,
        &mut next.m,
        &dn,
        &dm,
        config.dt,
        config.extinction_threshold,
    );
    next.t = state.t + config.dt;
    check_finite("n", &next.n)?;
    check_finite("m", &next.m)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    HorizonReached,
    Diverged,
    AllExtinct,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::HorizonReached => "horizon-reached",
            Termination::Diverged => "diverged",
            Termination::AllExtinct => "all-extinct",
        }
    }
}

/// One recorded sample, borrowed from a [`Trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<'a> {
    pub t: f64,
    pub n: &'a [f64],
    pub m: &'a [f64],
}

/// Sampled simulation output. Samples are stored column-flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n_species: usize,
    n_modifiers: usize,
    times: Vec<f64>,
    abundances: Vec<f64>,
    modifiers: Vec<f64>,
    /// Samples produced over the whole run, including any discarded ones.
    pub total_samples: usize,
    pub steps: u64,
    pub termination: Termination,
    pub final_state: SystemState,
}

impl Trajectory {
    fn new(n_species: usize, n_modifiers: usize) -> Self {
        Self {
            n_species,
            n_modifiers,
            times: Vec::new(),
            abundances: Vec::new(),
            modifiers: Vec::new(),
            total_samples: 0,
            steps: 0,
            termination: Termination::HorizonReached,
            final_state: SystemState {
                n: vec![0.0; n_species],
                m: vec![0.0; n_modifiers],
                t: 0.0,
            },
        }
    }

    fn push(&mut self, t: f64, n: &[f64], m: &[f64], retain: Option<usize>) {
        self.times.push(t);
        self.abundances.extend_from_slice(n);
        self.modifiers.extend_from_slice(m);
        self.total_samples += 1;
        if let Some(cap) = retain {
            if self.times.len() >= 2 * cap {
                let drop = self.times.len() - cap;
                self.times.drain(..drop);
                self.abundances.drain(..drop * self.n_species);
                self.modifiers.drain(..drop * self.n_modifiers);
            }
        }
    }

    /// Assembles a trajectory from flat sample columns; the last sample
    /// becomes the final state. Panics on inconsistent lengths.
    pub fn from_parts(
        n_species: usize,
        n_modifiers: usize,
        times: Vec<f64>,
        abundances: Vec<f64>,
        modifiers: Vec<f64>,
        termination: Termination,
    ) -> Self {
        let len = times.len();
        assert!(len > 0, "trajectory needs at least one sample");
        assert_eq!(abundances.len(), len * n_species);
        assert_eq!(modifiers.len(), len * n_modifiers);
        let final_state = SystemState {
            n: abundances[(len - 1) * n_species..].to_vec(),
            m: modifiers[(len - 1) * n_modifiers..].to_vec(),
            t: times[len - 1],
        };
        Self {
            n_species,
            n_modifiers,
            times,
            abundances,
            modifiers,
            total_samples: len,
            steps: 0,
            termination,
            final_state,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_modifiers(&self) -> usize {
        self.n_modifiers
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            t: self.times[i],
            n: &self.abundances[i * self.n_species..(i + 1) * self.n_species],
            m: &self.modifiers[i * self.n_modifiers..(i + 1) * self.n_modifiers],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Abundance of one species across the retained samples.
    pub fn species_series(&self, species: usize) -> impl Iterator<Item = f64> + '_ {
        self.abundances
            .iter()
            .skip(species)
            .step_by(self.n_species)
            .copied()
    }

    /// Panics if `h` is not a modifier index.
    pub fn modifier_series(&self, h: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(h < self.n_modifiers, "no modifier {h}");
        self.modifiers
            .iter()
            .skip(h)
            .step_by(self.n_modifiers)
            .copied()
    }
}

fn integrate(
    field: &dyn Field,
    spec: &SystemSpec,
    config: &IntegratorConfig,
    initial: &SystemState,
) -> Result<Trajectory, DynamicsError> {
    config.validate()?;
    initial.check_against(spec)?;

    let ns = spec.n_species;
    let nm = initial.m.len();
    let retain = config.retain_samples;
    let total_steps = config.total_steps();
    let cap = config.effective_cap();
    let stride = config.sample_stride;

    let mut traj = Trajectory::new(ns, nm);
    let mut n = initial.n.clone();
    let mut m = initial.m.clone();
    let mut dn = vec![0.0; ns];
    let mut dm = vec![0.0; nm];
    let t0 = initial.t;
    let mut streak = 0usize;
    let mut step: u64 = 0;
    let mut last_recorded: Option<u64> = None;

    let termination = loop {
        field.eval(&n, &m, &mut dn, &mut dm);
        if step % stride == 0 {
            traj.push(t0 + step as f64 * config.dt, &n, &m, retain);
            last_recorded = Some(step);
            if detect_convergence(&dn, config.convergence_tol) {
                streak += 1;
                if streak >= config.convergence_window {
                    break Termination::Converged;
                }
            } else {
                streak = 0;
            }
        }
        if step >= total_steps {
            break Termination::HorizonReached;
        }
        apply_euler(&mut n, &mut m, &dn, &dm, config.dt, config.extinction_threshold);
        step += 1;
        if n
            .iter()
            .chain(m.iter())
            .any(|v| !v.is_finite())
            || n.iter().any(|&v| v >= cap)
        {
            break Termination::Diverged;
        }
        if n.iter().all(|&v| v == 0.0) {
            break Termination::AllExtinct;
        }
    };

    let t_end = t0 + step as f64 * config.dt;
    if last_recorded != Some(step) {
        traj.push(t_end, &n, &m, retain);
    }
    traj.steps = step;
    traj.termination = termination;
    traj.final_state = SystemState { n, m, t: t_end };
    Ok(traj)
}

/// Integrates the modifier model until convergence, divergence, total
/// extinction or the horizon.
pub fn simulate(
    spec: &SystemSpec,
    config: &IntegratorConfig,
    initial: &SystemState,
) -> Result<Trajectory, DynamicsError> {
    let field = ModifierField {
        prep: Prepared::new(spec),
        omega: config.omega,
    };
    integrate(&field, spec, config, initial)
}

/// Integrates the pairwise model with modifiers frozen at `m_frozen`, using
/// the same stepping, clamping and termination rules as [`simulate`].
pub fn simulate_frozen(
    spec: &SystemSpec,
    config: &IntegratorConfig,
    initial_n: &[f64],
    m_frozen: &[f64],
) -> Result<Trajectory, DynamicsError> {
    let initial = SystemState {
        n: initial_n.to_vec(),
        m: m_frozen.to_vec(),
        t: 0.0,
    };
    let field = FrozenField {
        prep: Prepared::new(spec),
        frozen: m_frozen,
    };
    integrate(&field, spec, config, &initial)
}
