//! Numerical thresholds shared across modules.
//!
//! Spatial tolerances are relative to the domain length unless stated
//! otherwise; velocity tolerances are relative to a velocity scale.

/// Total mass of a density must be within this of one.
pub const MASS: f64 = 1e-12;

/// Two atoms closer than this (times domain length) are merged.
pub const ATOM_MERGE: f64 = 1e-12;

/// Allowed backwards step in a quantile or CDF, times domain length,
/// before it counts as a monotonicity violation.
pub const MONOTONE: f64 = 1e-9;

/// A quantile velocity is constant on a flat interval when its spread is
/// below this times the velocity scale.
pub const INPUT_CONSTRAINT: f64 = 1e-9;

/// Characteristics may approach each other within this (times domain
/// length) before they count as crossed.
pub const CROSSING: f64 = 1e-10;

/// Per-slice agreement of the `(x, V)` and `(z, U)` motion integrals.
pub const MOTION_IDENTITY: f64 = 1e-8;

/// Accuracy of fixed-step RK4 characteristics at the default grid
/// (`nt = 1000`), in domain-length units.
pub const GRID: f64 = 1e-6;

/// Maximum `W2(D_0, D_period)` for a demand to count as periodic.
pub const PERIODICITY: f64 = 1e-9;

/// Default number of time steps.
pub const DEFAULT_NT: usize = 1000;

/// Default number of retained harmonics in the periodic regime.
pub const DEFAULT_HARMONICS: usize = 64;
