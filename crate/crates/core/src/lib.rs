//! Optimal assignment and motion control for two-class swarms on a line.
//!
//! A resource swarm, described by a normalized density on an interval, is
//! steered by a velocity field so that it tracks an exogenous demand density.
//! The instantaneous cost is the squared 2-Wasserstein distance between the
//! two densities plus `alpha^2` times the kinetic (drag) power of the resource.
//!
//! In one dimension the density dynamics become linear once expressed in
//! quantile coordinates, and the problem splits into independent scalar LQ
//! tracking problems, one per level set of the initial resource quantile.
//! This crate implements that pipeline:
//!
//! * [`measures`]: densities with atoms, CDF/quantile algebra, `W2`.
//! * [`transport`]: characteristic (Lagrangian) simulation of the transport
//!   equation and the map between `(R, V)` and `(Q_R, U)`.
//! * [`partition`]: level-set partitions, partition averaging, the
//!   performance-limit constant `K`.
//! * [`lq`]: the scalar finite-horizon tracking solution.
//! * [`regimes`]: general, static and periodic full-problem solvers.
//! * [`assignment`]: explicit optimal assignment plans.
//! * [`oracle`]: brute-force verifiers used by tests and `verify` runs.

pub mod assignment;
pub mod error;
pub mod lq;
pub mod measures;
pub mod oracle;
pub mod par;
pub mod partition;
mod quadrature;
pub mod regimes;
pub mod tolerances;
pub mod transport;

pub use error::{Error, Result};
pub use measures::{CdfFunction, Density, Domain, QuantileFunction};
