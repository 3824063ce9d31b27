//! C ABI over the `hoispeed` engine.
//!
//! Systems and trajectories are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`HsStatus`]; on failure
//! the message is kept per thread and can be fetched with
//! [`hs_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hoispeed::classify::{classify_trajectory, ClassifyConfig, OutcomeKind};
use hoispeed::dynamics::{simulate, IntegratorConfig, SystemState, Termination, Trajectory};
use hoispeed::equilibria::{
    jacobian_eigenvalues, nullification_bifurcation, solve_steady_state, EquilibriumPoint, DEFAULT_SOLVER_TOL,
};
use hoispeed::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, SystemSpec, Topology};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsTopology {
    TransitiveA = 0,
    TransitiveB = 1,
    TransitiveC = 2,
    Intransitive = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsHoiKind {
    Symmetric = 0,
    AsymAffectedFirst = 1,
    AsymAffectedSecond = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsOutcomeKind {
    FixedPoint = 0,
    LimitCycle = 1,
    Unbounded = 2,
    AllExtinct = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsTermination {
    Converged = 0,
    HorizonReached = 1,
    Diverged = 2,
    AllExtinct = 3,
}

/// Integrator settings. `horizon <= 0` selects the default horizon rule,
/// `resolution_factor == 0` leaves only the absolute divergence cap and
/// `retain_samples == 0` keeps every sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsIntegratorConfig {
    pub dt: f64,
    pub omega: f64,
    pub extinction_threshold: f64,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub horizon: f64,
    pub divergence_cap: f64,
    pub resolution_factor: f64,
    pub sample_stride: u64,
    pub retain_samples: usize,
}

/// Classification result; `amplitude` and `period` are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsOutcome {
    pub kind: HsOutcomeKind,
    pub survivors: usize,
    pub amplitude: f64,
    pub period: f64,
}

/// Steady state of a three-species, one-modifier system.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsEquilibrium {
    pub n: [f64; 3],
    pub m: f64,
    pub residual: f64,
    pub max_real_part: f64,
}

/// Opaque system handle.
pub struct HsSystem {
    spec: SystemSpec,
}

/// Opaque trajectory handle.
pub struct HsTrajectory {
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(HsStatus, String);

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure(HsStatus::InvalidArgument, msg.to_string())
}

fn numerical(msg: impl std::fmt::Display) -> Failure {
    Failure(HsStatus::NumericalFailure, msg.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HsStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass either null or a pointer obtained from this library
    // (or a valid caller-owned struct), as documented on each function.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(HsStatus::NullPointer, format!("{what} is null")))
}

fn topology_from(raw: i32) -> Result<Topology, Failure> {
    Ok(match raw {
        0 => Topology::TransitiveA,
        1 => Topology::TransitiveB,
        2 => Topology::TransitiveC,
        3 => Topology::Intransitive,
        _ => return Err(invalid(format!("unknown topology code {raw}"))),
    })
}

fn kind_from(raw: i32) -> Result<HoiKind, Failure> {
    Ok(match raw {
        0 => HoiKind::Symmetric,
        1 => HoiKind::AsymAffectedFirst,
        2 => HoiKind::AsymAffectedSecond,
        _ => return Err(invalid(format!("unknown HOI kind code {raw}"))),
    })
}

impl From<&HsIntegratorConfig> for IntegratorConfig {
    fn from(c: &HsIntegratorConfig) -> Self {
        IntegratorConfig {
            dt: c.dt,
            omega: c.omega,
            extinction_threshold: c.extinction_threshold,
            convergence_tol: c.convergence_tol,
            convergence_window: c.convergence_window,
            horizon: (c.horizon > 0.0).then_some(c.horizon),
            divergence_cap: c.divergence_cap,
            resolution_factor: c.resolution_factor,
            sample_stride: c.sample_stride,
            retain_samples: (c.retain_samples > 0).then_some(c.retain_samples),
            ..IntegratorConfig::default()
        }
    }
}

/// Fills `out` with the default settings at speed 1.
///
/// # Safety
/// `out` must be null or point to writable memory for one config.
#[no_mangle]
pub unsafe extern "C" fn hs_integrator_config_default(out: *mut HsIntegratorConfig) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        let d = IntegratorConfig::default();
        let c = HsIntegratorConfig {
            dt: d.dt,
            omega: d.omega,
            extinction_threshold: d.extinction_threshold,
            convergence_tol: d.convergence_tol,
            convergence_window: d.convergence_window,
            horizon: 0.0,
            divergence_cap: d.divergence_cap,
            resolution_factor: d.resolution_factor,
            sample_stride: d.sample_stride,
            retain_samples: 0,
        };
        // SAFETY: checked non-null above; caller guarantees it is writable.
        unsafe { out.write(c) };
        Ok(())
    })
}

/// Builds a canonical three-species system. `topology` and `kind` take the
/// values of [`HsTopology`] and [`HsHoiKind`].
///
/// # Safety
/// `out` must be null or writable; on success it receives a handle owned by
/// the caller.
#[no_mangle]
pub unsafe extern "C" fn hs_system_new(
    topology: i32,
    kind: i32,
    alpha_ab: f64,
    alpha_ac: f64,
    alpha_bc: f64,
    beta: f64,
    out: *mut *mut HsSystem,
) -> HsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        let magnitudes = AlphaMagnitudes {
            ab: alpha_ab,
            ac: alpha_ac,
            bc: alpha_bc,
        };
        let spec = build_canonical(topology_from(topology)?, kind_from(kind)?, magnitudes).map_err(invalid)?;
        if !beta.is_finite() {
            return Err(invalid("beta must be finite"));
        }
        let handle = Box::new(HsSystem {
            spec: spec.with_beta(beta),
        });
        // SAFETY: checked non-null above.
        unsafe { out.write(Box::into_raw(handle)) };
        Ok(())
    })
}

/// # Safety
/// `system` must be a live handle from [`hs_system_new`] or null.
#[no_mangle]
pub unsafe extern "C" fn hs_system_set_beta(system: *mut HsSystem, beta: f64) -> HsStatus {
    guard(|| {
        // SAFETY: see function contract.
        let system = unsafe { system.as_mut() }.ok_or(Failure(HsStatus::NullPointer, "system is null".into()))?;
        if !beta.is_finite() {
            return Err(invalid("beta must be finite"));
        }
        system.spec.set_beta(beta);
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from [`hs_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_system_free(system: *mut HsSystem) {
    if !system.is_null() {
        // SAFETY: the handle came from Box::into_raw in hs_system_new.
        drop(unsafe { Box::from_raw(system) });
    }
}

/// Integrates from unit abundances and modifiers.
///
/// # Safety
/// `system` and `config` must be valid or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_simulate(
    system: *const HsSystem,
    config: *const HsIntegratorConfig,
    out: *mut *mut HsTrajectory,
) -> HsStatus {
    guard(|| {
        let system = non_null(system, "system")?;
        let config: IntegratorConfig = non_null(config, "config")?.into();
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        config.validate().map_err(invalid)?;
        let traj = simulate(&system.spec, &config, &SystemState::standard(&system.spec)).map_err(numerical)?;
        // SAFETY: checked non-null above.
        unsafe { out.write(Box::into_raw(Box::new(HsTrajectory { traj }))) };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from [`hs_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_free(traj: *mut HsTrajectory) {
    if !traj.is_null() {
        // SAFETY: the handle came from Box::into_raw in hs_simulate.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Retained sample count, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_len(traj: *const HsTrajectory) -> usize {
    // SAFETY: see function contract.
    unsafe { traj.as_ref() }.map_or(0, |t| t.traj.len())
}

/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_termination(
    traj: *const HsTrajectory,
    out: *mut HsTermination,
) -> HsStatus {
    guard(|| {
        let t = non_null(traj, "trajectory")?;
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        let code = match t.traj.termination {
            Termination::Converged => HsTermination::Converged,
            Termination::HorizonReached => HsTermination::HorizonReached,
            Termination::Diverged => HsTermination::Diverged,
            Termination::AllExtinct => HsTermination::AllExtinct,
        };
        // SAFETY: checked non-null above.
        unsafe { out.write(code) };
        Ok(())
    })
}

fn copy_series(values: impl Iterator<Item = f64>, len: usize, buf: *mut f64, cap: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure(HsStatus::NullPointer, "buffer is null".into()));
    }
    if cap < len {
        return Err(Failure(
            HsStatus::BufferTooSmall,
            format!("buffer holds {cap} values, need {len}"),
        ));
    }
    for (i, v) in values.enumerate() {
        // SAFETY: i < len <= cap and the caller guarantees cap writable slots.
        unsafe { buf.add(i).write(v) };
    }
    Ok(())
}

/// Copies sample times into `buf` (capacity `cap`).
///
/// # Safety
/// `traj` must be a live handle and `buf` must have `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_times(traj: *const HsTrajectory, buf: *mut f64, cap: usize) -> HsStatus {
    guard(|| {
        let t = &non_null(traj, "trajectory")?.traj;
        copy_series(t.times().iter().copied(), t.len(), buf, cap)
    })
}

/// Copies the abundance series of `species` (0 = A).
///
/// # Safety
/// As [`hs_trajectory_times`].
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_species(
    traj: *const HsTrajectory,
    species: usize,
    buf: *mut f64,
    cap: usize,
) -> HsStatus {
    guard(|| {
        let t = &non_null(traj, "trajectory")?.traj;
        if species >= t.n_species() {
            return Err(invalid(format!("species {species} out of range")));
        }
        copy_series(t.species_series(species), t.len(), buf, cap)
    })
}

/// Copies the series of modifier `index`.
///
/// # Safety
/// As [`hs_trajectory_times`].
#[no_mangle]
pub unsafe extern "C" fn hs_trajectory_modifier(
    traj: *const HsTrajectory,
    index: usize,
    buf: *mut f64,
    cap: usize,
) -> HsStatus {
    guard(|| {
        let t = &non_null(traj, "trajectory")?.traj;
        if index >= t.n_modifiers() {
            return Err(invalid(format!("modifier {index} out of range")));
        }
        copy_series(t.modifier_series(index), t.len(), buf, cap)
    })
}

/// Classifies a trajectory; pass `amplitude_tol` or `window_fraction` <= 0
/// for the defaults.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_classify(
    traj: *const HsTrajectory,
    amplitude_tol: f64,
    window_fraction: f64,
    out: *mut HsOutcome,
) -> HsStatus {
    guard(|| {
        let t = &non_null(traj, "trajectory")?.traj;
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        let mut config = ClassifyConfig::default();
        if amplitude_tol > 0.0 {
            config.amplitude_tol = amplitude_tol;
        }
        if window_fraction > 0.0 {
            config.window_fraction = window_fraction.min(1.0);
        }
        let o = classify_trajectory(t, &config).map_err(numerical)?;
        let kind = match o.kind {
            OutcomeKind::FixedPoint => HsOutcomeKind::FixedPoint,
            OutcomeKind::LimitCycle => HsOutcomeKind::LimitCycle,
            OutcomeKind::Unbounded => HsOutcomeKind::Unbounded,
            OutcomeKind::AllExtinct => HsOutcomeKind::AllExtinct,
        };
        let record = HsOutcome {
            kind,
            survivors: o.survivors,
            amplitude: o.amplitude().unwrap_or(f64::NAN),
            period: o.period().unwrap_or(f64::NAN),
        };
        // SAFETY: checked non-null above.
        unsafe { out.write(record) };
        Ok(())
    })
}

/// Newton solve from unit abundances and modifiers plus the Jacobian
/// spectrum at the result.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hs_steady_state(system: *const HsSystem, omega: f64, out: *mut HsEquilibrium) -> HsStatus {
    guard(|| {
        let spec = &non_null(system, "system")?.spec;
        if out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "out is null".into()));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(invalid("omega must be finite and non-negative"));
        }
        let sol = solve_steady_state(spec, omega, &EquilibriumPoint::unit_guess(spec), DEFAULT_SOLVER_TOL)
            .map_err(numerical)?;
        let report = jacobian_eigenvalues(spec, omega, &sol.point).map_err(numerical)?;
        let p = &sol.point;
        let record = HsEquilibrium {
            n: [p.n[0], p.n[1], p.n[2]],
            m: p.m[0],
            residual: p.residual_norm,
            max_real_part: report.max_real_part,
        };
        // SAFETY: checked non-null above.
        unsafe { out.write(record) };
        Ok(())
    })
}

/// Nullification strength of the symmetric intransitive system; `n_out`
/// receives the three abundances at that point.
///
/// # Safety
/// `beta_star` must be writable and `n_out` must hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn hs_nullification(alpha: f64, beta_star: *mut f64, n_out: *mut f64) -> HsStatus {
    guard(|| {
        if beta_star.is_null() || n_out.is_null() {
            return Err(Failure(HsStatus::NullPointer, "output pointer is null".into()));
        }
        let b = nullification_bifurcation(alpha).map_err(|e| match e {
            hoispeed::equilibria::EquilibriumError::InvalidAlpha(_) => invalid(e),
            _ => numerical(e),
        })?;
        // SAFETY: checked non-null; caller guarantees three slots in n_out.
        unsafe {
            beta_star.write(b.beta_star);
            for (i, v) in b.point.n.iter().enumerate() {
                n_out.add(i).write(*v);
            }
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf`. Returns the full message length excluding the terminator, or 0 if
/// no error is recorded. A shorter buffer receives a truncated message.
///
/// # Safety
/// `buf` must be null or hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hs_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            // SAFETY: n + 1 <= cap bytes are writable per the contract.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                buf.add(n).write(0);
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
