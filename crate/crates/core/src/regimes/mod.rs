//! Optimal resource motion for static, periodic and general demand.
//!
//! All three solvers share one construction: the level-set partition of
//! `Q_R(0)` is built, every cell (and every sample label on the continuous
//! part) becomes a scalar tracking problem against the partition-averaged
//! demand, and the resulting tracks are reassembled into `Q_R(t)`.

mod cost;
mod demand;
mod general;
mod periodic;
mod static_demand;
mod tracks;

pub use cost::{evaluate_cost, RealizedCost, SliceCost};
pub use demand::{DemandRule, DemandSignal, PeriodicProfile};
pub use general::solve_general;
pub use periodic::{solve_periodic, HarmonicRow, Warmup};
pub use static_demand::solve_static;
pub use tracks::{build_layout, jump_labels, FourierTrack, Track, TrackKind, TrackLayout, TrackPath};

use crate::error::{invalid_param, Error, Result};
use crate::lq::LQParams;
use crate::measures::{density_from_quantile, Density, Domain, QuantileFunction};
use crate::partition::LevelSetPartition;
use crate::quadrature::gauss5;
use crate::transport::{advect_density, QuantileVelocity, Side, VelocityField};
use crate::{par, tolerances};

/// Discretization of a scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    /// Sample labels on the continuous part of `Q_R(0)`.
    pub nx: usize,
    /// Time steps over the horizon (or one period).
    pub nt: usize,
    /// Retained harmonics in the periodic regime.
    pub n_harmonics: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            nx: 200,
            nt: tolerances::DEFAULT_NT,
            n_harmonics: tolerances::DEFAULT_HARMONICS,
        }
    }
}

/// Initial resource, demand and tradeoff weight.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub resource: Density,
    pub demand: DemandSignal,
    pub alpha: f64,
    /// Horizon `T`; ignored by the periodic solver when the demand carries
    /// its own period.
    pub horizon: f64,
    pub grid: Grid,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        LQParams::new(self.alpha, self.horizon, self.grid.nt)?;
        if self.grid.nx == 0 {
            return Err(invalid_param("nx", "must be at least 1"));
        }
        if self.grid.n_harmonics == 0 {
            return Err(invalid_param("harmonics", "must be at least 1"));
        }
        Ok(())
    }

    /// Union of the resource and demand domains.
    pub fn domain(&self) -> Result<Domain> {
        Ok(self.resource.domain().union(&self.demand.domain()?))
    }

    /// Sample labels and demand jump labels for the continuous part.
    fn labels(&self, qd: Option<&QuantileFunction>) -> (Vec<f64>, Vec<f64>) {
        let nx = self.grid.nx;
        let mut extra: Vec<f64> = (1..nx).map(|i| i as f64 / nx as f64).collect();
        let mut jumps = Vec::new();
        if let Some(q) = qd {
            extra.extend(q.knots().iter().map(|k| k.0));
            jumps = jump_labels(q);
        }
        (extra, jumps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Static,
    Periodic,
    General,
}

/// Cost split. `total = assignment + alpha^2 motion`, and `assignment`
/// includes the averaging constant `k`. In the periodic regime all four are
/// averages per unit time over one period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostBreakdown {
    pub assignment: f64,
    pub motion: f64,
    pub total: f64,
    pub k: f64,
}

impl CostBreakdown {
    fn new(tracking: f64, motion: f64, k: f64, alpha: f64) -> Self {
        let assignment = tracking + k;
        CostBreakdown {
            assignment,
            motion,
            total: assignment + alpha * alpha * motion,
            k,
        }
    }
}

/// Optimal trajectory of a scenario.
#[derive(Clone, Debug)]
pub struct OptimalControlSolution {
    pub regime: Regime,
    pub alpha: f64,
    /// Horizon, or the period in the periodic regime.
    pub horizon: f64,
    /// Uniform time grid over `[0, horizon]`.
    pub times: Vec<f64>,
    pub partition: LevelSetPartition,
    pub layout: TrackLayout,
    pub paths: Vec<TrackPath>,
    pub cost: CostBreakdown,
    /// Domain covering the resource, the demand and every track.
    pub domain: Domain,
    /// Initial resource as given.
    pub resource: Density,
    /// Transient from the initial resource into the periodic orbit.
    pub warmup: Option<Warmup>,
    /// Per-cell harmonic table (periodic regime only).
    pub harmonics: Vec<HarmonicRow>,
}

impl OptimalControlSolution {
    pub(crate) fn assemble(
        regime: Regime,
        scenario: &Scenario,
        horizon: f64,
        times: Vec<f64>,
        partition: LevelSetPartition,
        layout: TrackLayout,
        paths: Vec<TrackPath>,
        cost: CostBreakdown,
    ) -> Result<Self> {
        let mut sol = OptimalControlSolution {
            regime,
            alpha: scenario.alpha,
            horizon,
            times,
            partition,
            layout,
            paths,
            cost,
            domain: scenario.domain()?,
            resource: scenario.resource.clone(),
            warmup: None,
            harmonics: Vec::new(),
        };
        let (mut lo, mut hi) = (sol.domain.lo, sol.domain.hi);
        for &t in &sol.times {
            for r in sol.positions_at(t) {
                if !r.is_finite() {
                    return Err(Error::LeftDomain { t, x: r });
                }
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        sol.domain = Domain::new(lo, hi)?;
        Ok(sol)
    }

    /// Riccati gain `p(t)`; constant `alpha` for the periodic orbit.
    pub fn p_at(&self, t: f64) -> f64 {
        match self.regime {
            Regime::Periodic => self.alpha,
            _ => self.alpha * ((self.horizon - t.clamp(0.0, self.horizon)) / self.alpha).tanh(),
        }
    }

    pub fn positions_at(&self, t: f64) -> Vec<f64> {
        self.paths.iter().map(|p| p.state_at(t)).collect()
    }

    pub fn controls_at(&self, t: f64) -> Vec<f64> {
        self.paths.iter().map(|p| p.control_at(t)).collect()
    }

    /// Optimal `Q_R(., t)`.
    pub fn quantile_at(&self, t: f64) -> Result<QuantileFunction> {
        self.layout.quantile(self.domain, &self.positions_at(t))
    }

    pub fn resource_at(&self, t: f64) -> Result<Density> {
        density_from_quantile(&self.quantile_at(t)?)
    }

    /// Optimal densities on `times`.
    pub fn resource_trajectory(&self) -> Result<Vec<Density>> {
        par::map(&self.times, |&t| self.resource_at(t)).into_iter().collect()
    }

    /// Positions of the cell tracks on `times`, one row per cell.
    pub fn cell_trajectories(&self) -> Vec<Vec<f64>> {
        self.layout
            .tracks
            .iter()
            .zip(&self.paths)
            .filter(|(t, _)| t.is_cell())
            .map(|(_, p)| self.times.iter().map(|&t| p.state_at(t)).collect())
            .collect()
    }

    /// Optimal velocity `V(x, t) = -(p(t) x + Y(x, t)) / alpha^2`.
    pub fn velocity(&self) -> OptimalVelocity<'_> {
        OptimalVelocity { sol: self }
    }

    /// Optimal velocity in quantile coordinates, `U(z, t)`.
    pub fn quantile_velocity(&self) -> OptimalQuantileVelocity<'_> {
        OptimalQuantileVelocity { sol: self }
    }

    /// Fail if two tracks swap order on the time grid.
    pub fn check_order(&self) -> Result<()> {
        let tol = tolerances::CROSSING * self.domain.len();
        for &t in &self.times {
            let r = self.positions_at(t);
            for (j, w) in r.windows(2).enumerate() {
                if w[0] - w[1] > tol {
                    return Err(Error::OrderViolation { t, left: j, right: j + 1 });
                }
            }
        }
        Ok(())
    }

    /// Advect the optimal `R(0)` by the optimal velocity with `nt` RK4
    /// steps over `[0, horizon]`.
    pub fn simulate(&self, nt: usize) -> Result<Vec<Density>> {
        let r0 = self.resource_at(0.0)?;
        advect_density(&r0, &self.velocity(), self.horizon, nt)
    }

    /// Tracking and motion integrals of the finite-horizon tracks by
    /// Gauss-Legendre in time and exact integration in `z`.
    pub(crate) fn integrate_tracks(&self) -> (f64, f64) {
        let parts = par::map_range(self.times.len() - 1, |k| {
            let (mut a, mut m) = (0.0, 0.0);
            for (s, w) in gauss5(self.times[k], self.times[k + 1]) {
                let e: Vec<f64> = self.paths.iter().map(|p| p.state_at(s) - p.demand_at(s)).collect();
                let u = self.controls_at(s);
                a += w * self.layout.l2_sq(&e);
                m += w * self.layout.l2_sq(&u);
            }
            (a, m)
        });
        parts.into_iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1))
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let r = self.positions_at(t);
        let u = self.controls_at(t);
        let p = self.p_at(t);
        let a2 = self.alpha * self.alpha;
        let y = r.iter().zip(&u).map(|(&r, &u)| -a2 * u - p * r).collect();
        Snapshot { r, y, p, a2 }
    }
}

struct Snapshot {
    r: Vec<f64>,
    y: Vec<f64>,
    p: f64,
    a2: f64,
}

/// Pick between tracks `lo` and `hi` for a point in the gap between them:
/// the nearer one, a cell on ties.
fn nearer(layout: &TrackLayout, lo: usize, hi: usize, d_lo: f64, d_hi: f64) -> usize {
    if d_lo < d_hi {
        lo
    } else if d_hi < d_lo {
        hi
    } else if layout.tracks[hi].is_cell() && !layout.tracks[lo].is_cell() {
        hi
    } else {
        lo
    }
}

impl Snapshot {
    fn feedforward(&self, layout: &TrackLayout, x: f64) -> f64 {
        let n = self.r.len();
        let j = self.r.partition_point(|&r| r <= x);
        if j == 0 {
            return self.extended(layout, 0, x);
        }
        if j == n {
            return self.extended(layout, n - 1, x);
        }
        let mut lo = j - 1;
        let hi = j;
        // several tracks at exactly x: an atom wins over a sample
        let mut k = lo;
        while self.r[k] == x && k > 0 && self.r[k - 1] == x {
            k -= 1;
            if layout.tracks[k].is_cell() {
                lo = k;
                break;
            }
        }
        if layout.linked[lo] && lo + 1 == hi && self.r[hi] > self.r[lo] {
            let lam = (x - self.r[lo]) / (self.r[hi] - self.r[lo]);
            return self.y[lo] + lam * (self.y[hi] - self.y[lo]);
        }
        self.extended(layout, nearer(layout, lo, hi, x - self.r[lo], self.r[hi] - x), x)
    }

    /// Feedforward of track `k` continued to `x` off the support: a sample
    /// at the end of a linked chain extends its chain's last segment, any
    /// other track keeps its own value.
    fn extended(&self, layout: &TrackLayout, k: usize, x: f64) -> f64 {
        let seg = if layout.tracks[k].is_cell() {
            None
        } else if k + 1 < self.r.len() && layout.linked[k] && self.r[k + 1] > self.r[k] {
            Some((k, k + 1))
        } else if k > 0 && layout.linked[k - 1] && self.r[k] > self.r[k - 1] {
            Some((k - 1, k))
        } else {
            None
        };
        match seg {
            Some((a, b)) => {
                let lam = (x - self.r[a]) / (self.r[b] - self.r[a]);
                self.y[a] + lam * (self.y[b] - self.y[a])
            }
            None => self.y[k],
        }
    }

    /// Feedforward just below or above `x`: the first or last track sitting
    /// exactly at `x`, if any.
    fn feedforward_from(&self, layout: &TrackLayout, x: f64, side: Side) -> f64 {
        match side {
            Side::Below => {
                let j = self.r.partition_point(|&r| r < x);
                if j < self.r.len() && self.r[j] == x {
                    return self.y[j];
                }
            }
            Side::Above => {
                let j = self.r.partition_point(|&r| r <= x);
                if j > 0 && self.r[j - 1] == x {
                    return self.y[j - 1];
                }
            }
            Side::At => {}
        }
        self.feedforward(layout, x)
    }

    fn velocity(&self, layout: &TrackLayout, x: f64, side: Side) -> f64 {
        -(self.p * x + self.feedforward_from(layout, x, side)) / self.a2
    }
}

/// Optimal spatial velocity. Between linked sample tracks the feedforward
/// is interpolated linearly in `x`. In gaps between tracks the nearer track
/// decides: an atom's feedforward is held constant, and a sample ending a
/// linked chain extends that chain's last segment. Every tracked point then
/// moves in a field that is affine in `x` around it.
pub struct OptimalVelocity<'a> {
    sol: &'a OptimalControlSolution,
}

impl VelocityField for OptimalVelocity<'_> {
    fn velocity(&self, x: f64, t: f64) -> f64 {
        self.sol.snapshot(t).velocity(&self.sol.layout, x, Side::At)
    }

    fn velocity_from(&self, x: f64, t: f64, side: Side) -> f64 {
        self.sol.snapshot(t).velocity(&self.sol.layout, x, side)
    }

    fn velocities(&self, xs: &[f64], t: f64) -> Vec<f64> {
        let s = self.sol.snapshot(t);
        xs.iter().map(|&x| s.velocity(&self.sol.layout, x, Side::At)).collect()
    }

    fn velocities_from(&self, xs: &[f64], sides: &[Side], t: f64) -> Vec<f64> {
        let s = self.sol.snapshot(t);
        xs.iter().zip(sides).map(|(&x, &side)| s.velocity(&self.sol.layout, x, side)).collect()
    }
}

/// Optimal quantile velocity: the cell control on each cell, linear in `z`
/// between linked samples.
pub struct OptimalQuantileVelocity<'a> {
    sol: &'a OptimalControlSolution,
}

impl QuantileVelocity for OptimalQuantileVelocity<'_> {
    fn velocity(&self, z: f64, t: f64) -> f64 {
        let lay = &self.sol.layout;
        let tr = &lay.tracks;
        let idx = match self.sol.partition.cell_at(z) {
            Some(c) => tr.iter().position(|t| t.kind == TrackKind::Cell(c)),
            None => None,
        };
        if let Some(j) = idx {
            return self.sol.paths[j].control_at(t);
        }
        let j = tr.partition_point(|t| t.z_lo < z);
        if j < tr.len() && tr[j].z_lo == z {
            return self.sol.paths[j].control_at(t);
        }
        if j == 0 {
            return self.sol.paths[0].control_at(t);
        }
        if j == tr.len() {
            return self.sol.paths[j - 1].control_at(t);
        }
        let (lo, hi) = (j - 1, j);
        let (u_lo, u_hi) = (self.sol.paths[lo].control_at(t), self.sol.paths[hi].control_at(t));
        if lay.linked[lo] {
            let lam = (z - tr[lo].z_lo) / (tr[hi].z_lo - tr[lo].z_lo);
            return u_lo + lam * (u_hi - u_lo);
        }
        if nearer(lay, lo, hi, z - tr[lo].z_hi, tr[hi].z_lo - z) == lo {
            u_lo
        } else {
            u_hi
        }
    }

    /// Below `z`: the cell ending at `z` or the first sample at `z`. Above:
    /// the cell starting at `z` or the last sample at `z`.
    fn velocity_from(&self, z: f64, t: f64, side: Side) -> f64 {
        let tr = &self.sol.layout.tracks;
        let j = match side {
            Side::At => None,
            Side::Below => {
                let k = tr.partition_point(|t| t.z_lo < z);
                if k > 0 && tr[k - 1].is_cell() && z <= tr[k - 1].z_hi {
                    Some(k - 1)
                } else {
                    (k..tr.len()).take_while(|&i| tr[i].z_lo == z).find(|&i| !tr[i].is_cell())
                }
            }
            Side::Above => {
                let k = tr.partition_point(|t| t.z_lo <= z);
                if k > 0 && tr[k - 1].is_cell() && z < tr[k - 1].z_hi {
                    Some(k - 1)
                } else {
                    (0..k).rev().take_while(|&i| tr[i].z_lo == z).find(|&i| !tr[i].is_cell())
                }
            }
        };
        match j {
            Some(j) => self.sol.paths[j].control_at(t),
            None => self.velocity(z, t),
        }
    }
}
