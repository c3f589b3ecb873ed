//! Direct transcription of the atomic control problem.
//!
//! Atom positions are piecewise linear in time on a uniform grid, so the
//! motion energy of a candidate is exact. The assignment term is integrated
//! by Simpson's rule on each step with the demand sampled at the step ends
//! and midpoint. Every row of positions is kept weakly ordered (atoms
//! driven by a velocity field never pass each other), so each candidate is
//! admissible and the search approaches the optimum from above, up to
//! Simpson error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lp::{Atoms, MAX_ATOMS};
use crate::error::{invalid_param, Error, Result};
use crate::par;

pub const MAX_STEPS: usize = 2000;

/// Atomic resource, atomic demand on a half-step grid, and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteInstance {
    pub positions: Vec<f64>,
    pub masses: Vec<f64>,
    /// `2 nt + 1` demand slices at `t = k T / (2 nt)`.
    pub demand: Vec<Vec<(f64, f64)>>,
    pub alpha: f64,
    pub horizon: f64,
    pub nt: usize,
}

impl DiscreteInstance {
    /// Sample `demand(t)` on the half-step grid.
    pub fn from_fn(
        resource: &Atoms,
        demand: impl Fn(f64) -> Vec<(f64, f64)>,
        alpha: f64,
        horizon: f64,
        nt: usize,
    ) -> Result<Self> {
        let inst = DiscreteInstance {
            positions: resource.iter().map(|p| p.0).collect(),
            masses: resource.iter().map(|p| p.1).collect(),
            demand: (0..=2 * nt).map(|k| demand(horizon * k as f64 / (2 * nt) as f64)).collect(),
            alpha,
            horizon,
            nt,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 || n > MAX_ATOMS || self.demand.iter().any(|d| d.is_empty() || d.len() > MAX_ATOMS) {
            return Err(Error::InstanceTooLarge(format!("at most {MAX_ATOMS} atoms per measure")));
        }
        if self.nt == 0 || self.nt > MAX_STEPS {
            return Err(Error::InstanceTooLarge(format!("nt must be in 1..={MAX_STEPS}")));
        }
        if self.masses.len() != n || self.demand.len() != 2 * self.nt + 1 {
            return Err(Error::GridMismatch("instance arrays have inconsistent lengths".into()));
        }
        if !(self.alpha > 0.0 && self.horizon > 0.0) {
            return Err(invalid_param("alpha", "alpha and horizon must be positive"));
        }
        Ok(())
    }

    fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }
}

/// Search settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop a restart once the relative decrease over 100 iterations drops
    /// below this.
    pub rel_tol: f64,
}

impl Default for DirectConfig {
    fn default() -> Self {
        DirectConfig {
            restarts: 10,
            max_iters: 5000,
            seed: 0,
            rel_tol: 1e-11,
        }
    }
}

/// Best trajectory found: `positions[n][i]` is atom `i` at `t_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectResult {
    pub positions: Vec<Vec<f64>>,
    pub cost: f64,
    /// Whether the best restart met the stopping tolerance.
    pub converged: bool,
    pub restart_costs: Vec<f64>,
}

/// `W2^2` between atoms `x` (masses `m`) and `d`, with the gradient in `x`
/// from the sorted (monotone) coupling.
fn slice_cost(x: &[f64], m: &[f64], d: &[(f64, f64)], grad: Option<&mut [f64]>) -> f64 {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ds = d.to_vec();
    ds.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut g = vec![0.0; x.len()];
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (m[order[0]], ds[0].1);
    let mut cost = 0.0;
    while i < order.len() && j < ds.len() {
        let a = order[i];
        let w = ra.min(rb);
        let diff = x[a] - ds[j].0;
        cost += w * diff * diff;
        g[a] += 2.0 * w * diff;
        ra -= w;
        rb -= w;
        if ra <= rb {
            i += 1;
            if i < order.len() {
                ra = m[order[i]];
            }
        } else {
            j += 1;
            if j < ds.len() {
                rb = ds[j].1;
            }
        }
    }
    if let Some(out) = grad {
        out.copy_from_slice(&g);
    }
    cost
}

/// Objective and gradient for interior positions `z` (rows `1..=nt`).
fn objective(inst: &DiscreteInstance, z: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let n = inst.positions.len();
    let nt = inst.nt;
    let h = inst.dt();
    let a2 = inst.alpha * inst.alpha;
    let row = |k: usize| -> &[f64] {
        if k == 0 {
            &inst.positions
        } else {
            &z[(k - 1) * n..k * n]
        }
    };
    let mut total = 0.0;
    let mut g = vec![0.0; z.len()];
    let mut gs = vec![0.0; n];
    let mut mid = vec![0.0; n];
    for k in 0..=nt {
        let wk = if k == 0 || k == nt { h / 6.0 } else { h / 3.0 };
        total += wk * slice_cost(row(k), &inst.masses, &inst.demand[2 * k], Some(&mut gs));
        if k > 0 {
            for i in 0..n {
                g[(k - 1) * n + i] += wk * gs[i];
            }
        }
    }
    for k in 0..nt {
        let (x0, x1) = (row(k), row(k + 1));
        for i in 0..n {
            mid[i] = 0.5 * (x0[i] + x1[i]);
        }
        total += 4.0 * h / 6.0 * slice_cost(&mid, &inst.masses, &inst.demand[2 * k + 1], Some(&mut gs));
        for i in 0..n {
            let gm = 4.0 * h / 6.0 * gs[i] * 0.5;
            if k > 0 {
                g[(k - 1) * n + i] += gm;
            }
            g[k * n + i] += gm;
            let v = (x1[i] - x0[i]) / h;
            total += a2 * inst.masses[i] * v * v * h;
            let gv = 2.0 * a2 * inst.masses[i] * v;
            if k > 0 {
                g[(k - 1) * n + i] -= gv;
            }
            g[k * n + i] += gv;
        }
    }
    if let Some(out) = grad {
        out.copy_from_slice(&g);
    }
    total
}

/// Euclidean projection of each time row onto `x_1 <= ... <= x_n`
/// (pool adjacent violators).
fn project_ordered(z: &mut [f64], n: usize) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(n);
    for row in z.chunks_mut(n) {
        blocks.clear();
        for &v in row.iter() {
            let mut cur = (v, 1usize);
            while let Some(&(m, c)) = blocks.last() {
                if m <= cur.0 {
                    break;
                }
                blocks.pop();
                let c2 = c + cur.1;
                cur = ((m * c as f64 + cur.0 * cur.1 as f64) / c2 as f64, c2);
            }
            blocks.push(cur);
        }
        let mut i = 0;
        for &(m, c) in &blocks {
            row[i..i + c].fill(m);
            i += c;
        }
    }
}

/// Accelerated projected gradient descent with backtracking and adaptive restart.
fn descend(inst: &DiscreteInstance, mut x: Vec<f64>, cfg: &DirectConfig) -> (Vec<f64>, f64, bool) {
    let len = x.len();
    let n = inst.positions.len();
    project_ordered(&mut x, n);
    let h = inst.dt();
    let m_max = inst.masses.iter().cloned().fold(0.0, f64::max);
    let mut lip = (4.0 * inst.alpha * inst.alpha * m_max / h + 2.0 * h * m_max).max(1e-12);
    let mut g = vec![0.0; len];
    let mut fx = objective(inst, &x, None);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut history = vec![fx];
    let mut converged = false;
    for it in 0..cfg.max_iters {
        let fy = objective(inst, &y, Some(&mut g));
        if g.iter().all(|&v| v == 0.0) {
            converged = true;
            break;
        }
        let mut cand;
        loop {
            cand = y.iter().zip(&g).map(|(a, b)| a - b / lip).collect::<Vec<_>>();
            project_ordered(&mut cand, n);
            let fc = objective(inst, &cand, None);
            // sufficient decrease for the projected step
            let lin: f64 = cand.iter().zip(&y).zip(&g).map(|((c, p), gi)| gi * (c - p)).sum();
            let sq: f64 = cand.iter().zip(&y).map(|(c, p)| (c - p) * (c - p)).sum();
            if fc <= fy + lin + 0.5 * lip * sq + 1e-15 * fy.abs() || lip > 1e15 {
                break;
            }
            lip *= 2.0;
        }
        let fc = objective(inst, &cand, None);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        if fc > fx {
            // adaptive restart: drop the momentum
            y = x.clone();
            theta = 1.0;
            continue;
        }
        let beta = (theta - 1.0) / theta_next;
        y = cand.iter().zip(&x).map(|(c, p)| c + beta * (c - p)).collect();
        x = cand;
        fx = fc;
        theta = theta_next;
        lip *= 0.95;
        history.push(fx);
        if it >= 100 && history.len() > 100 {
            let old = history[history.len() - 101];
            if (old - fx) <= cfg.rel_tol * old.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }
    (x, fx, converged)
}

/// Minimize the discretized cost over piecewise-linear atom trajectories,
/// from `cfg.restarts` seeded starts (run in parallel). Restart 0 starts at
/// rest; the others start from random straight-line moves.
pub fn direct_optimal_control(inst: &DiscreteInstance, cfg: &DirectConfig) -> Result<DirectResult> {
    inst.validate()?;
    let n = inst.positions.len();
    let nt = inst.nt;
    let (lo, hi) = inst
        .demand
        .iter()
        .flatten()
        .map(|p| p.0)
        .chain(inst.positions.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let runs = par::map_range(cfg.restarts.max(1), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        let target: Vec<f64> = (0..n)
            .map(|i| {
                if r == 0 {
                    inst.positions[i]
                } else {
                    rng.gen_range(lo..=hi)
                }
            })
            .collect();
        let mut x0 = Vec::with_capacity(nt * n);
        for k in 1..=nt {
            let s = k as f64 / nt as f64;
            for i in 0..n {
                x0.push(inst.positions[i] + s * (target[i] - inst.positions[i]));
            }
        }
        descend(inst, x0, cfg)
    });
    let restart_costs: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    let mut positions = vec![inst.positions.clone()];
    positions.extend(best.0.chunks(n).map(<[f64]>::to_vec));
    Ok(DirectResult {
        positions,
        cost: best.1,
        converged: best.2,
        restart_costs,
    })
}
