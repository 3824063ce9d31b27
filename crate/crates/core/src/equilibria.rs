//! Steady states of the modifier model: damped Newton on the full vector
//! field, closed forms for the asymmetric unit-strength systems, the
//! nullification point where the equilibrium modifier reaches zero, and a
//! numerical linear stability check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{growth_unchecked, rates_unchecked, DynamicsError};
use crate::netmodel::{build_canonical, AlphaMagnitudes, HoiKind, SystemSpec, Topology};

pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 200;
pub const MAX_STEP_HALVINGS: usize = 30;
const FD_RELATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("singular Jacobian at iteration {iteration}")]
    Singular {
        iteration: usize,
        iterate: EquilibriumPoint,
    },
    #[error("no convergence after {iterations} iterations (residual {})", .iterate.residual_norm)]
    NoConvergence {
        iterations: usize,
        iterate: EquilibriumPoint,
    },
    #[error("closed form for {kind} requires {requirement}; beta = {beta} grows without bound")]
    Domain {
        kind: HoiKind,
        beta: f64,
        requirement: &'static str,
    },
    #[error("no closed form for the {0} modification")]
    NoClosedForm(HoiKind),
    #[error("point is not an equilibrium (residual {0:e})")]
    NotAnEquilibrium(f64),
    #[error("no positive-abundance solution: {0}")]
    NoPositiveSolution(String),
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub n: Vec<f64>,
    pub m: Vec<f64>,
    pub residual_norm: f64,
}

impl EquilibriumPoint {
    /// Unit abundances and modifiers, the natural Newton starting point.
    pub fn unit_guess(spec: &SystemSpec) -> Self {
        Self {
            n: vec![1.0; spec.n_species],
            m: vec![1.0; spec.hois.len()],
            residual_norm: f64::NAN,
        }
    }

    fn from_vector(spec: &SystemSpec, x: &[f64], residual_norm: f64) -> Self {
        Self {
            n: x[..spec.n_species].to_vec(),
            m: x[spec.n_species..].to_vec(),
            residual_norm,
        }
    }

    /// Abundances followed by modifiers.
    pub fn to_vector(&self) -> Vec<f64> {
        self.n.iter().chain(&self.m).copied().collect()
    }
}

/// Right-hand side of the full `(n, m)` system at a point.
pub fn steady_state_residual(
    spec: &SystemSpec,
    omega: f64,
    point: &EquilibriumPoint,
) -> Result<Vec<f64>, DynamicsError> {
    residual_at(spec, omega, &point.to_vector())
}

fn residual_at(spec: &SystemSpec, omega: f64, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let ns = spec.n_species;
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite {
            what: if index < ns { "n" } else { "m" },
            index: if index < ns { index } else { index - ns },
            value: x[index],
        });
    }
    // Newton iterates may leave the positive orthant, so the sign check of
    // `rhs` is skipped here.
    let (dn, dm) = rates_unchecked(spec, &x[..ns], &x[ns..], omega);
    Ok(dn.into_iter().chain(dm).collect())
}

/// Residual with per-capita growth in place of the abundance rates; its
/// interior roots are those of the full system, without the boundary roots
/// that trap Newton on the product form.
fn per_capita_residual_at(spec: &SystemSpec, omega: f64, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    residual_at(spec, omega, x)?;
    let ns = spec.n_species;
    let (growth, dm) = growth_unchecked(spec, &x[..ns], &x[ns..], omega);
    Ok(growth.into_iter().chain(dm).collect())
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub point: EquilibriumPoint,
    pub iterations: usize,
    /// Set when the solver landed on a point with a negative abundance.
    pub negative_abundance: bool,
}

/// Variables held fixed during a solve; their equations are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pinned {
    /// Species forced to zero abundance.
    pub extinct: Vec<usize>,
    /// Modifier indices held at the guess value.
    pub modifiers: Vec<usize>,
}

/// Central finite-difference Jacobian of `f` restricted to `free` variables.
fn fd_jacobian(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>, DynamicsError>,
    x: &[f64],
    free: &[usize],
) -> Result<DMatrix<f64>, DynamicsError> {
    let k = free.len();
    let mut jac = DMatrix::zeros(k, k);
    let mut probe = x.to_vec();
    for (col, &var) in free.iter().enumerate() {
        let h = FD_RELATIVE_STEP * x[var].abs().max(1.0);
        probe[var] = x[var] + h;
        let plus = f(&probe)?;
        probe[var] = x[var] - h;
        let minus = f(&probe)?;
        probe[var] = x[var];
        for (row, &eq) in free.iter().enumerate() {
            jac[(row, col)] = (plus[eq] - minus[eq]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Damped Newton iteration from `guess` on the full steady-state system.
pub fn solve_steady_state(
    spec: &SystemSpec,
    omega: f64,
    guess: &EquilibriumPoint,
    tol: f64,
) -> Result<Solution, EquilibriumError> {
    solve_pinned(spec, omega, guess, tol, &Pinned::default())
}

/// Newton solve with some variables held fixed, e.g. boundary equilibria
/// with extinct species or a modifier pinned at a prescribed value.
///
/// Surviving species are solved on their per-capita growth rates; the
/// reported residual is always that of the full system.
pub fn solve_pinned(
    spec: &SystemSpec,
    omega: f64,
    guess: &EquilibriumPoint,
    tol: f64,
    pinned: &Pinned,
) -> Result<Solution, EquilibriumError> {
    let ns = spec.n_species;
    let mut x = guess.to_vector();
    residual_at(spec, 1.0, &x)?;
    for &i in &pinned.extinct {
        x[i] = 0.0;
    }
    let free: Vec<usize> = (0..x.len())
        .filter(|&v| {
            !(v < ns && pinned.extinct.contains(&v)) && !(v >= ns && pinned.modifiers.contains(&(v - ns)))
        })
        .collect();
    // Omega scales the modifier rows only and cannot move the root; solving
    // with omega = 0 would leave those rows empty.
    let scale = if omega > 0.0 { omega } else { 1.0 };
    let f = |v: &[f64]| per_capita_residual_at(spec, scale, v);
    let free_norm = |r: &[f64]| free.iter().fold(0.0f64, |acc, &i| acc.max(r[i].abs()));

    let mut r = f(&x)?;
    let mut norm = free_norm(&r);
    for iteration in 0..MAX_NEWTON_ITERATIONS {
        if norm < tol {
            return Ok(finish(spec, omega, x, iteration));
        }
        let jac = fd_jacobian(&f, &x, &free)?;
        let rhs_vec = DVector::from_iterator(free.len(), free.iter().map(|&i| -r[i]));
        let step = match jac.lu().solve(&rhs_vec) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                return Err(EquilibriumError::Singular {
                    iteration,
                    iterate: EquilibriumPoint::from_vector(spec, &x, norm),
                })
            }
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let mut trial = x.clone();
            for (k, &var) in free.iter().enumerate() {
                trial[var] += lambda * step[k];
            }
            let tr = f(&trial)?;
            let tn = free_norm(&tr);
            if tn < norm {
                accepted = Some((trial, tr, tn));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, tr, tn)) => {
                x = trial;
                r = tr;
                norm = tn;
            }
            None => {
                // Newton direction failed to reduce the residual even when
                // damped; take the full step and let the iteration count decide.
                for (k, &var) in free.iter().enumerate() {
                    x[var] += step[k];
                }
                r = f(&x)?;
                norm = free_norm(&r);
            }
        }
    }
    if norm < tol {
        return Ok(finish(spec, omega, x, MAX_NEWTON_ITERATIONS));
    }
    Err(EquilibriumError::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        iterate: EquilibriumPoint::from_vector(spec, &x, norm),
    })
}

fn finish(spec: &SystemSpec, omega: f64, x: Vec<f64>, iterations: usize) -> Solution {
    let ns = spec.n_species;
    let negative_abundance = x[..ns].iter().any(|&v| v < 0.0);
    let residual = residual_at(spec, omega, &x).map(|r| max_norm(&r)).unwrap_or(f64::NAN);
    Solution {
        point: EquilibriumPoint::from_vector(spec, &x, residual),
        iterations,
        negative_abundance,
    }
}

/// Interior equilibrium of the unit-strength intransitive system with one
/// asymmetric modifier, in closed form.
pub fn closed_form_equilibrium(kind: HoiKind, beta: f64) -> Result<EquilibriumPoint, EquilibriumError> {
    let (n, m) = match kind {
        HoiKind::AsymAffectedFirst => {
            if !(beta < 2.0) {
                return Err(EquilibriumError::Domain {
                    kind,
                    beta,
                    requirement: "beta < 2",
                });
            }
            let s = 2.0 / (2.0 - beta);
            (vec![s, 1.0, s], (2.0 + beta) / (2.0 - beta))
        }
        HoiKind::AsymAffectedSecond => {
            if !(beta > -2.0) {
                return Err(EquilibriumError::Domain {
                    kind,
                    beta,
                    requirement: "beta > -2",
                });
            }
            let s = 2.0 / (2.0 + beta);
            (vec![s, s, 1.0], 1.0 + beta)
        }
        HoiKind::Symmetric => return Err(EquilibriumError::NoClosedForm(kind)),
    };
    let spec = build_canonical(Topology::Intransitive, kind, AlphaMagnitudes::identical(1.0))
        .expect("finite magnitudes")
        .with_beta(beta);
    let mut point = EquilibriumPoint {
        n,
        m: vec![m],
        residual_norm: 0.0,
    };
    point.residual_norm = max_norm(&steady_state_residual(&spec, 1.0, &point)?);
    Ok(point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nullification {
    pub alpha: f64,
    pub beta_star: f64,
    pub point: EquilibriumPoint,
}

/// Strength at which the equilibrium modifier of the symmetric intransitive
/// system reaches zero: solve the abundance equations with `m = 0`, then
/// `beta* = -1 / n_C`.
pub fn nullification_bifurcation(alpha: f64) -> Result<Nullification, EquilibriumError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(EquilibriumError::InvalidAlpha(alpha));
    }
    let spec = build_canonical(
        Topology::Intransitive,
        HoiKind::Symmetric,
        AlphaMagnitudes::identical(alpha),
    )
    .expect("finite magnitudes");
    let guess = EquilibriumPoint {
        n: vec![1.0; 3],
        m: vec![0.0],
        residual_norm: f64::NAN,
    };
    let pinned = Pinned {
        extinct: vec![],
        modifiers: vec![0],
    };
    let sol = solve_pinned(&spec, 1.0, &guess, DEFAULT_SOLVER_TOL, &pinned)?;
    let n = &sol.point.n;
    if n.iter().any(|&v| v <= 0.0) {
        return Err(EquilibriumError::NoPositiveSolution(format!(
            "solver reached n = {n:?}"
        )));
    }
    let modifier = spec.hois[0].modifier;
    let beta_star = -1.0 / n[modifier];
    let spec = spec.with_beta(beta_star);
    let mut point = sol.point.clone();
    point.residual_norm = max_norm(&steady_state_residual(&spec, 1.0, &point)?);
    Ok(Nullification {
        alpha,
        beta_star,
        point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Eigenvalue>,
    pub max_real_part: f64,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.max_real_part < 0.0
    }
}

/// Residual bound a point must satisfy before its Jacobian is analysed.
pub const EQUILIBRIUM_CHECK_TOL: f64 = 1e-6;

/// Eigenvalues of the central-difference Jacobian of the full vector field.
pub fn jacobian_eigenvalues(
    spec: &SystemSpec,
    omega: f64,
    point: &EquilibriumPoint,
) -> Result<StabilityReport, EquilibriumError> {
    let x = point.to_vector();
    let residual = max_norm(&residual_at(spec, omega, &x)?);
    if !(residual < EQUILIBRIUM_CHECK_TOL) {
        return Err(EquilibriumError::NotAnEquilibrium(residual));
    }
    let all: Vec<usize> = (0..x.len()).collect();
    let f = |v: &[f64]| residual_at(spec, omega, v);
    let jac = fd_jacobian(&f, &x, &all)?;
    let eigenvalues: Vec<Eigenvalue> = jac
        .complex_eigenvalues()
        .iter()
        .map(|c| Eigenvalue { re: c.re, im: c.im })
        .collect();
    let max_real_part = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
    })
}
