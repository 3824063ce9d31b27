//! Run configuration: a flat JSON document whose every key has a default.
//!
//! A written `manifest.json` is itself a valid configuration, so any run can
//! be replayed from its manifest alone.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::classify::ClassifyConfig;
use crate::dynamics::{
    HorizonRule, IntegratorConfig, SystemState, DEFAULT_CONVERGENCE_TOL, DEFAULT_CONVERGENCE_WINDOW,
    DEFAULT_DIVERGENCE_CAP, DEFAULT_DT, DEFAULT_RESOLUTION_FACTOR, DEFAULT_EXTINCTION_THRESHOLD, DEFAULT_SAMPLE_STRIDE,
};
use crate::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, SystemSpec, Topology};
use crate::sweep::{beta_domain, ExistenceProbes, GridAxis, InnerGrid, SweepOptions, DEFAULT_WINDOW_CAP};

/// `{lo, hi, count}` of an alpha axis; spacing is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisConfig {
    fn to_axis(self, name: &str) -> GridAxis {
        GridAxis::linear(name, self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Recorded by manifests; the subcommand given on the command line wins.
    pub command: Option<String>,
    pub topology: Topology,
    pub hoi_kind: HoiKind,
    /// Shared magnitude of all three pairwise interactions.
    pub alpha: f64,
    pub alpha_ab: Option<f64>,
    pub alpha_ac: Option<f64>,
    pub alpha_bc: Option<f64>,
    pub beta: f64,
    pub omega: f64,
    pub n0: f64,
    pub m0: f64,

    pub dt: f64,
    pub horizon: Option<f64>,
    pub horizon_rule: HorizonRule,
    pub extinction_threshold: f64,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub divergence_cap: f64,
    pub resolution_factor: f64,
    pub sample_stride: u64,
    /// Trailing samples kept by `simulate`; `None` keeps the whole run.
    pub trajectory_samples: Option<usize>,
    pub amplitude_tol: f64,
    pub window_fraction: f64,

    pub beta_count: usize,
    pub omega_count: usize,
    /// Defaults to the kind's strength domain.
    pub beta_lo: Option<f64>,
    pub beta_hi: Option<f64>,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub window_cap: usize,

    pub alpha_ab_axis: AxisConfig,
    pub alpha_other_axis: AxisConfig,
    pub probe_distinguished: Vec<f64>,
    pub probe_other: Vec<f64>,
    pub bracket: (f64, f64),
    pub bisection_tol: f64,
    pub solver_tol: f64,

    /// 0 selects the available parallelism.
    pub workers: usize,
    pub out: String,
    /// Always true: no part of a run draws random numbers.
    pub deterministic: bool,
    /// Free-form annotations; carried into manifests and otherwise ignored.
    pub metadata: Option<serde_json::Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let probes = ExistenceProbes::default();
        Self {
            command: None,
            topology: Topology::Intransitive,
            hoi_kind: HoiKind::Symmetric,
            alpha: 2.0,
            alpha_ab: None,
            alpha_ac: None,
            alpha_bc: None,
            beta: -3.0,
            omega: 1.0,
            n0: 1.0,
            m0: 1.0,
            dt: DEFAULT_DT,
            horizon: None,
            horizon_rule: HorizonRule::TimeUnits,
            extinction_threshold: DEFAULT_EXTINCTION_THRESHOLD,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            divergence_cap: DEFAULT_DIVERGENCE_CAP,
            resolution_factor: DEFAULT_RESOLUTION_FACTOR,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
            trajectory_samples: None,
            amplitude_tol: ClassifyConfig::default().amplitude_tol,
            window_fraction: ClassifyConfig::default().window_fraction,
            beta_count: 27,
            omega_count: 17,
            beta_lo: None,
            beta_hi: None,
            omega_lo: 1e-3,
            omega_hi: 1e2,
            window_cap: DEFAULT_WINDOW_CAP,
            alpha_ab_axis: AxisConfig {
                lo: 0.5,
                hi: 3.0,
                count: 5,
            },
            alpha_other_axis: AxisConfig {
                lo: 0.5,
                hi: 3.0,
                count: 5,
            },
            probe_distinguished: probes.distinguished,
            probe_other: probes.other,
            bracket: (1.0, 2.0),
            bisection_tol: 0.01,
            solver_tol: crate::equilibria::DEFAULT_SOLVER_TOL,
            workers: 0,
            out: "out".to_string(),
            deterministic: true,
            metadata: None,
        }
    }
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| CliError::Config {
        path: String::new(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.deterministic {
            return Err(invalid("deterministic", "runs are always deterministic"));
        }
        for (path, value) in [
            ("alpha", Some(self.alpha)),
            ("alpha_ab", self.alpha_ab),
            ("alpha_ac", self.alpha_ac),
            ("alpha_bc", self.alpha_bc),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid(path, format!("magnitude must be finite and non-negative, got {v}")));
                }
            }
        }
        if !self.beta.is_finite() {
            return Err(invalid("beta", "beta must be finite"));
        }
        if !(self.n0.is_finite() && self.n0 >= 0.0) {
            return Err(invalid("n0", "initial abundance must be finite and non-negative"));
        }
        if !self.m0.is_finite() {
            return Err(invalid("m0", "initial modifier must be finite"));
        }
        if let Err(e) = self.integrator().validate() {
            let message = e.to_string();
            let path = [
                "resolution_factor",
                "dt",
                "omega",
                "horizon",
                "extinction_threshold",
                "convergence_tol",
                "convergence_window",
                "divergence_cap",
                "sample_stride",
            ]
            .into_iter()
            .find(|p| message.contains(p))
            .unwrap_or("");
            return Err(invalid(path, message));
        }
        if !(self.amplitude_tol.is_finite() && self.amplitude_tol >= 0.0) {
            return Err(invalid("amplitude_tol", "amplitude_tol must be finite and non-negative"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid("window_fraction", "window_fraction must lie in (0, 1]"));
        }
        if self.window_cap < 3 {
            return Err(invalid("window_cap", "window_cap must be at least 3"));
        }
        let inner = self.inner_grid();
        inner
            .beta
            .validate()
            .map_err(|e| invalid("beta_count", e.to_string()))?;
        inner
            .omega
            .validate()
            .map_err(|e| invalid("omega_count", e.to_string()))?;
        self.alpha_ab_axis
            .to_axis("alpha_ab")
            .validate()
            .map_err(|e| invalid("alpha_ab_axis", e.to_string()))?;
        self.alpha_other_axis
            .to_axis("alpha_other")
            .validate()
            .map_err(|e| invalid("alpha_other_axis", e.to_string()))?;
        if self.probe_distinguished.is_empty() || self.probe_other.is_empty() {
            return Err(invalid("probe_distinguished", "probe sets must be non-empty"));
        }
        if self.probe_distinguished.iter().chain(&self.probe_other).any(|v| !v.is_finite()) {
            return Err(invalid("probe_other", "probe values must be finite"));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(invalid("bisection_tol", "bisection_tol must be positive"));
        }
        if !(self.solver_tol > 0.0) {
            return Err(invalid("solver_tol", "solver_tol must be positive"));
        }
        if self.out.is_empty() {
            return Err(invalid("out", "output directory must be named"));
        }
        Ok(())
    }

    pub fn magnitudes(&self) -> AlphaMagnitudes {
        AlphaMagnitudes {
            ab: self.alpha_ab.unwrap_or(self.alpha),
            ac: self.alpha_ac.unwrap_or(self.alpha),
            bc: self.alpha_bc.unwrap_or(self.alpha),
        }
    }

    /// The canonical system with the configured strength applied.
    pub fn spec(&self) -> Result<SystemSpec, CliError> {
        let spec = build_canonical(self.topology, self.hoi_kind, self.magnitudes())
            .map_err(|e| invalid("alpha", e.to_string()))?;
        Ok(spec.with_beta(self.beta))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            omega: self.omega,
            extinction_threshold: self.extinction_threshold,
            convergence_tol: self.convergence_tol,
            convergence_window: self.convergence_window,
            horizon: self.horizon,
            horizon_rule: self.horizon_rule,
            divergence_cap: self.divergence_cap,
            resolution_factor: self.resolution_factor,
            sample_stride: self.sample_stride,
            retain_samples: None,
        }
    }

    pub fn initial_state(&self, spec: &SystemSpec) -> SystemState {
        SystemState {
            n: vec![self.n0; spec.n_species],
            m: vec![self.m0; spec.hois.len()],
            t: 0.0,
        }
    }

    pub fn classify(&self) -> ClassifyConfig {
        ClassifyConfig {
            amplitude_tol: self.amplitude_tol,
            window_fraction: self.window_fraction,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            workers: self.workers,
            classify: self.classify(),
            window_cap: self.window_cap,
        }
    }

    pub fn inner_grid(&self) -> InnerGrid {
        self.inner_grid_for(self.hoi_kind)
    }

    /// Inner grid for `kind`; unset strength bounds follow the kind's domain.
    pub fn inner_grid_for(&self, kind: HoiKind) -> InnerGrid {
        let (lo, hi) = beta_domain(kind);
        InnerGrid {
            beta: GridAxis::linear(
                "beta",
                self.beta_lo.unwrap_or(lo),
                self.beta_hi.unwrap_or(hi),
                self.beta_count,
            ),
            omega: GridAxis::log("omega", self.omega_lo, self.omega_hi, self.omega_count),
        }
    }

    pub fn alpha_axes(&self) -> (GridAxis, GridAxis) {
        (
            self.alpha_ab_axis.to_axis("alpha_ab"),
            self.alpha_other_axis.to_axis("alpha_other"),
        )
    }

    pub fn probes(&self) -> ExistenceProbes {
        ExistenceProbes {
            distinguished: self.probe_distinguished.clone(),
            other: self.probe_other.clone(),
        }
    }
}
