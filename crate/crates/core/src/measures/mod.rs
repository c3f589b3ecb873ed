//! One-dimensional densities, their CDFs and quantiles, and the
//! 2-Wasserstein distance.
//!
//! Densities are sorted atoms plus a piecewise-constant histogram, so CDFs
//! are piecewise linear with jumps and quantiles are piecewise linear with
//! flats. Every integral over `z` in this module is evaluated in closed form
//! on affine pieces.

mod cdf;
mod density;
mod distance;
mod quantile;
mod transform;

pub use cdf::CdfFunction;
pub use density::{Atom, Density, Domain};
pub use distance::{l2_quantile_distance, wasserstein2};
pub use quantile::{FlatInterval, QuantileFunction, Segment};
pub use transform::{
    cdf_from_quantile, cdf_of, density_from_quantile, pushforward, pushforward_with, quantile_of,
};

pub(crate) use quantile::merged_breakpoints;
