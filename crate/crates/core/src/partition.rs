//! Level-set partitions of `[0, 1]`, partition averaging, and the
//! performance-limit constant `K`.
//!
//! The partition induced by a quantile `q` groups the percentiles on which
//! `q` takes the same value. Interval cells are the flat intervals of `q`
//! (atoms of the resource); everything else is a continuum of singletons,
//! which is never materialized and is represented by the complement of the
//! interval cells.

use std::fmt;

use crate::error::Result;
use crate::measures::{density_from_quantile, quantile_of, Density, QuantileFunction};
use crate::quadrature::{affine_sq, trapezoid};

/// An interval cell `(z_lo, z_hi]` of a level-set partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub z_lo: f64,
    pub z_hi: f64,
    /// Value of the generating quantile on the cell.
    pub level: f64,
}

impl Cell {
    pub fn mass(&self) -> f64 {
        self.z_hi - self.z_lo
    }
}

/// Partition of `[0, 1]` into interval cells (ordered, strictly increasing
/// levels) and a continuum of singletons filling the rest.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LevelSetPartition {
    cells: Vec<Cell>,
}

/// Level-set partition of `q0`: its interval cells are exactly the flat
/// intervals of `q0`.
pub fn build_partition(q0: &QuantileFunction) -> LevelSetPartition {
    LevelSetPartition {
        cells: q0
            .flats()
            .iter()
            .map(|f| Cell {
                z_lo: f.z_lo,
                z_hi: f.z_hi,
                level: f.level,
            })
            .collect(),
    }
}

impl LevelSetPartition {
    /// Partition with the given interval cells. Cells must be disjoint and
    /// sorted; levels are informational.
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        LevelSetPartition { cells }
    }

    /// Partition made only of singletons.
    pub fn trivial() -> Self {
        LevelSetPartition::default()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn is_trivial(&self) -> bool {
        self.cells.is_empty()
    }

    /// Total mass of the interval cells.
    pub fn cell_mass(&self) -> f64 {
        self.cells.iter().map(Cell::mass).sum()
    }

    /// Index of the interval cell containing `z`, using `(z_lo, z_hi]`
    /// (the first cell also owns `z = 0`).
    pub fn cell_at(&self, z: f64) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.z_hi < z);
        let c = self.cells.get(i)?;
        let inside = (z > c.z_lo || (z == 0.0 && c.z_lo == 0.0)) && z <= c.z_hi;
        inside.then_some(i)
    }

    /// Maximal open intervals of `[0, 1]` not covered by interval cells.
    pub fn continuum(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut z = 0.0;
        for c in &self.cells {
            if c.z_lo > z {
                out.push((z, c.z_lo));
            }
            z = c.z_hi;
        }
        if z < 1.0 {
            out.push((z, 1.0));
        }
        out
    }
}

impl fmt::Display for LevelSetPartition {
    /// One line per interval cell: `z_lo z_hi level mass`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# interval cells: {}", self.cells.len())?;
        writeln!(f, "# z_lo z_hi level mass")?;
        for c in &self.cells {
            writeln!(f, "{:.17e} {:.17e} {:.17e} {:.17e}", c.z_lo, c.z_hi, c.level, c.mass())?;
        }
        let cont: f64 = self.continuum().iter().map(|(a, b)| b - a).sum();
        writeln!(f, "# continuum mass: {cont:.17e}")
    }
}

/// A partition-averaged quantile at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedSlice {
    /// The averaged quantile: cell means on interval cells, the input on
    /// the continuum.
    pub quantile: QuantileFunction,
    /// Mean of the input over each interval cell, in cell order.
    pub cell_values: Vec<f64>,
}

/// Average `qd` with respect to `p`: replace it on each interval cell by
/// its mean there.
pub fn average_wrt_partition(qd: &QuantileFunction, p: &LevelSetPartition) -> AveragedSlice {
    let cell_values: Vec<f64> = p
        .cells
        .iter()
        .map(|c| qd.integral(c.z_lo, c.z_hi) / c.mass())
        .collect();
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(qd.knots().len() + 2 * p.cells.len());
    let breaks = qd.knots();
    let push_continuum = |a: f64, b: f64, knots: &mut Vec<(f64, f64)>| {
        knots.push((a, qd.eval_right(a)));
        for &(z, v) in breaks {
            if z > a && z < b {
                knots.push((z, v));
            }
        }
        knots.push((b, qd.eval(b)));
    };
    let mut z = 0.0;
    for (c, &v) in p.cells.iter().zip(&cell_values) {
        if c.z_lo > z {
            push_continuum(z, c.z_lo, &mut knots);
        }
        knots.push((c.z_lo, v));
        knots.push((c.z_hi, v));
        z = c.z_hi;
    }
    if z < 1.0 {
        push_continuum(z, 1.0, &mut knots);
    }
    let quantile = QuantileFunction::from_knots(qd.domain(), knots)
        .expect("cell means of a monotone quantile are ordered");
    AveragedSlice {
        quantile,
        cell_values,
    }
}

/// Density `D-bar` whose quantile is the partition average of `d`'s.
/// Each interval cell becomes an atom of mass `|P_i|`.
pub fn averaged_density(d: &Density, p: &LevelSetPartition) -> Result<Density> {
    let avg = average_wrt_partition(&quantile_of(d), p);
    density_from_quantile(&avg.quantile)
}

/// `int_0^1 (qd - qd_bar)^2 dz`: the part of the tracking error no
/// partition-piecewise-constant quantile can remove.
pub fn averaging_residual(qd: &QuantileFunction, p: &LevelSetPartition) -> f64 {
    p.cells
        .iter()
        .map(|c| {
            let mean = qd.integral(c.z_lo, c.z_hi) / c.mass();
            let mut zs = vec![c.z_lo];
            zs.extend(qd.breakpoints().into_iter().filter(|&z| z > c.z_lo && z < c.z_hi));
            zs.push(c.z_hi);
            zs.windows(2)
                .map(|w| affine_sq(w[0], w[1], qd.eval_right(w[0]) - mean, qd.eval(w[1]) - mean))
                .sum::<f64>()
        })
        .sum()
}

/// Performance-limit constant `K = int_0^T int_0^1 (Q_D - Q_D_bar)^2 dz dt`,
/// by the trapezoid rule over the given demand slices.
pub fn limit_constant(times: &[f64], demand: &[QuantileFunction], p: &LevelSetPartition) -> f64 {
    let residuals: Vec<f64> = crate::par::map(demand, |q| averaging_residual(q, p));
    trapezoid(times, &residuals)
}
