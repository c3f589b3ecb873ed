//! Independent brute-force references used by tests and acceptance runs.
//!
//! Nothing here calls into the solvers or shares their numerical kernels:
//! transport costs come from enumeration and a simplex solve, the Riccati
//! reference from its own RK4 stepper and a discrete recursion, and the
//! direct method from gradient search over explicit trajectories.

mod direct;
mod lp;
mod riccati;

pub use direct::{direct_optimal_control, DirectConfig, DirectResult, DiscreteInstance, MAX_STEPS};
pub use lp::{lp_wasserstein, northwest_wasserstein, permutation_wasserstein, simplex_wasserstein, Atoms, MAX_ATOMS};
pub use riccati::{discrete_lq, riccati_rk4, DiscreteLQ};
