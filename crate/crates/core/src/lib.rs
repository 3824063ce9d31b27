//! Simulation and analysis of Lotka-Volterra networks whose pairwise
//! interactions are modified by a third species at a finite speed.

pub mod classify;
pub mod dynamics;
pub mod netmodel;
pub mod equilibria;
pub mod sweep;
pub mod cli;
