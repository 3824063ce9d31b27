//! Categorical outcomes of trajectories: fixed point, limit cycle, unbounded
//! growth or total extinction, plus oscillation metrics and the
//! intransitive/transitive regime series.

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::dynamics::{Termination, Trajectory};

pub const DEFAULT_AMPLITUDE_TOL: f64 = 1e-3;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
/// Minimum number of maxima of `n_A` for a limit-cycle verdict.
pub const MIN_MAXIMA: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("trajectory is empty")]
    Empty,
    #[error("trailing window has {0} samples, need at least 3")]
    WindowTooShort(usize),
    #[error("regime series needs exactly one modifier, system has {0}")]
    UnsupportedSpec(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    FixedPoint,
    LimitCycle,
    Unbounded,
    AllExtinct,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::FixedPoint => "fixedpoint",
            OutcomeKind::LimitCycle => "limitcycle",
            OutcomeKind::Unbounded => "unbounded",
            OutcomeKind::AllExtinct => "allextinct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationMetrics {
    /// Peak-to-trough per species over the window.
    pub amplitude: Vec<f64>,
    /// Mean spacing of successive maxima of `n_A`.
    pub period: Option<f64>,
    pub frequency: Option<f64>,
    /// Strict local maxima of `n_A` found in the window.
    pub maxima: usize,
}

impl OscillationMetrics {
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub survivors: usize,
    pub metrics: Option<OscillationMetrics>,
    pub final_n: Vec<f64>,
    pub final_m: Vec<f64>,
}

impl Outcome {
    /// Largest per-species amplitude, if metrics were computed.
    pub fn amplitude(&self) -> Option<f64> {
        self.metrics.as_ref().map(OscillationMetrics::max_amplitude)
    }

    pub fn period(&self) -> Option<f64> {
        self.metrics.as_ref().and_then(|m| m.period)
    }
}

#[derive(Serialize)]
struct OutcomeRecord<'a> {
    kind: OutcomeKind,
    survivors: usize,
    amplitude: Option<f64>,
    period: Option<f64>,
    final_n: &'a [f64],
    final_m: &'a [f64],
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        OutcomeRecord {
            kind: self.kind,
            survivors: self.survivors,
            amplitude: self.amplitude(),
            period: self.period(),
            final_n: &self.final_n,
            final_m: &self.final_m,
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub amplitude_tol: f64,
    pub window_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            amplitude_tol: DEFAULT_AMPLITUDE_TOL,
            window_fraction: DEFAULT_WINDOW_FRACTION,
        }
    }
}

/// Number of strictly positive entries.
pub fn coexistence_count(n: &[f64]) -> usize {
    n.iter().filter(|&&x| x > 0.0).count()
}

/// Index range of the trailing window. The window is a fraction of all
/// samples the run produced, clipped to what the trajectory retained.
fn window_range(traj: &Trajectory, window_fraction: f64) -> std::ops::Range<usize> {
    let wanted = (traj.total_samples as f64 * window_fraction).ceil() as usize;
    let len = traj.len();
    len - wanted.min(len)..len
}

/// Strict three-point local maxima.
fn local_maxima(series: &[f64]) -> Vec<usize> {
    series
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Amplitude per species over the trailing window and the period of `n_A`.
pub fn oscillation_metrics(traj: &Trajectory, window_fraction: f64) -> OscillationMetrics {
    let range = window_range(traj, window_fraction);
    let species = traj.n_species();
    let mut lo = vec![f64::INFINITY; species];
    let mut hi = vec![f64::NEG_INFINITY; species];
    for i in range.clone() {
        for (s, &x) in traj.sample(i).n.iter().enumerate() {
            lo[s] = lo[s].min(x);
            hi[s] = hi[s].max(x);
        }
    }
    let amplitude = if range.is_empty() {
        vec![0.0; species]
    } else {
        hi.iter().zip(&lo).map(|(h, l)| h - l).collect()
    };

    let series: Vec<f64> = range.clone().map(|i| traj.sample(i).n[0]).collect();
    let maxima = local_maxima(&series);
    let period = (maxima.len() >= 2).then(|| {
        let times = traj.times();
        let first = times[range.start + maxima[0]];
        let last = times[range.start + maxima[maxima.len() - 1]];
        (last - first) / (maxima.len() - 1) as f64
    });
    OscillationMetrics {
        amplitude,
        period,
        frequency: period.map(|p| 1.0 / p),
        maxima: maxima.len(),
    }
}

pub fn classify_trajectory(
    traj: &Trajectory,
    config: &ClassifyConfig,
) -> Result<Outcome, ClassifyError> {
    if traj.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let final_n = traj.final_state.n.clone();
    let final_m = traj.final_state.m.clone();
    let survivors = coexistence_count(&final_n);
    let outcome = |kind, metrics| Outcome {
        kind,
        survivors,
        metrics,
        final_n: final_n.clone(),
        final_m: final_m.clone(),
    };

    if traj.termination == Termination::Diverged {
        return Ok(outcome(OutcomeKind::Unbounded, None));
    }
    if survivors == 0 {
        return Ok(outcome(OutcomeKind::AllExtinct, None));
    }
    let window = window_range(traj, config.window_fraction).len();
    if traj.termination == Termination::Converged {
        let metrics = (window >= 3).then(|| oscillation_metrics(traj, config.window_fraction));
        return Ok(outcome(OutcomeKind::FixedPoint, metrics));
    }
    if window < 3 {
        return Err(ClassifyError::WindowTooShort(window));
    }

    let metrics = oscillation_metrics(traj, config.window_fraction);
    let surviving_amplitude = metrics
        .amplitude
        .iter()
        .zip(&final_n)
        .filter(|(_, &n)| n > 0.0)
        .map(|(&a, _)| a)
        .fold(0.0, f64::max);
    let kind = if surviving_amplitude > config.amplitude_tol && metrics.maxima >= MIN_MAXIMA {
        OutcomeKind::LimitCycle
    } else {
        OutcomeKind::FixedPoint
    };
    Ok(outcome(kind, Some(metrics)))
}

/// Community structure implied by the sign of the single modifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeLabel {
    Intransitive,
    Transitive,
    Neutral,
}

impl RegimeLabel {
    pub fn from_modifier(m: f64) -> Self {
        if m > 0.0 {
            RegimeLabel::Intransitive
        } else if m < 0.0 {
            RegimeLabel::Transitive
        } else {
            RegimeLabel::Neutral
        }
    }
}

pub fn regime_series(traj: &Trajectory) -> Result<Vec<(f64, RegimeLabel)>, ClassifyError> {
    if traj.n_modifiers() != 1 {
        return Err(ClassifyError::UnsupportedSpec(traj.n_modifiers()));
    }
    Ok(traj
        .samples()
        .map(|s| (s.t, RegimeLabel::from_modifier(s.m[0])))
        .collect())
}
