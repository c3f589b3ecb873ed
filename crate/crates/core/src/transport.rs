//! Transport of densities by velocity fields, and the change of variables
//! between `(R, V)` and quantile coordinates `(Q_R, U)`.
//!
//! Densities are moved by their characteristics: atoms and histogram edges
//! follow `x' = V(x, t)` (fixed-step RK4), cell masses are carried along.

use crate::error::{Error, Result};
use crate::measures::{cdf_of, quantile_of, Atom, CdfFunction, Density, Domain, QuantileFunction};
use crate::par;
use crate::tolerances;

/// Which value of a possibly discontinuous field to read at a point: the
/// limit from below, the value at the point, or the limit from above.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Below,
    At,
    Above,
}

/// Spatial velocity field `V(x, t)`.
pub trait VelocityField: Sync {
    fn velocity(&self, x: f64, t: f64) -> f64;

    /// One-sided value; fields continuous at `x` need not override this.
    fn velocity_from(&self, x: f64, t: f64, side: Side) -> f64 {
        let _ = side;
        self.velocity(x, t)
    }

    /// Velocities at many points at one time.
    fn velocities(&self, xs: &[f64], t: f64) -> Vec<f64> {
        xs.iter().map(|&x| self.velocity(x, t)).collect()
    }

    /// One-sided velocities at many points at one time.
    fn velocities_from(&self, xs: &[f64], sides: &[Side], t: f64) -> Vec<f64> {
        xs.iter().zip(sides).map(|(&x, &s)| self.velocity_from(x, t, s)).collect()
    }
}

/// Velocity `U(z, t)` in quantile coordinates.
pub trait QuantileVelocity: Sync {
    fn velocity(&self, z: f64, t: f64) -> f64;

    /// One-sided value in `z`.
    fn velocity_from(&self, z: f64, t: f64, side: Side) -> f64 {
        let _ = side;
        self.velocity(z, t)
    }
}

/// Closure-backed velocity field.
#[derive(Clone, Copy)]
pub struct Rule<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> VelocityField for Rule<F> {
    fn velocity(&self, x: f64, t: f64) -> f64 {
        (self.0)(x, t)
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> QuantileVelocity for Rule<F> {
    fn velocity(&self, z: f64, t: f64) -> f64 {
        (self.0)(z, t)
    }
}

/// Field sampled on a tensor grid, interpolated bilinearly and clamped
/// outside the grid. Serves both as a spatial and a quantile velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    xs: Vec<f64>,
    ts: Vec<f64>,
    /// Row-major `[time][space]`.
    values: Vec<f64>,
}

impl GridField {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let sorted = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]);
        if !sorted(&xs) || !sorted(&ts) {
            return Err(Error::GridMismatch("grid axes must be nonempty and increasing".into()));
        }
        if values.len() != xs.len() * ts.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch(format!(
                "expected {} finite values for a {}x{} grid",
                xs.len() * ts.len(),
                ts.len(),
                xs.len()
            )));
        }
        Ok(GridField { xs, ts, values })
    }

    /// Sample any field on a grid.
    pub fn sample(xs: Vec<f64>, ts: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = ts.iter().flat_map(|&t| xs.iter().map(move |&x| (t, x))).map(|(t, x)| f(x, t)).collect();
        Self::new(xs, ts, values)
    }

    fn eval(&self, x: f64, t: f64) -> f64 {
        let (i, wx) = bracket(&self.xs, x);
        let (k, wt) = bracket(&self.ts, t);
        let n = self.xs.len();
        let at = |k: usize, i: usize| self.values[k * n + i];
        let i1 = (i + 1).min(n - 1);
        let k1 = (k + 1).min(self.ts.len() - 1);
        let lo = at(k, i) * (1.0 - wx) + at(k, i1) * wx;
        let hi = at(k1, i) * (1.0 - wx) + at(k1, i1) * wx;
        lo * (1.0 - wt) + hi * wt
    }
}

/// Index of the cell containing `x` and the interpolation weight, clamped.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

impl VelocityField for GridField {
    fn velocity(&self, x: f64, t: f64) -> f64 {
        self.eval(x, t)
    }
}

impl QuantileVelocity for GridField {
    fn velocity(&self, z: f64, t: f64) -> f64 {
        self.eval(z, t)
    }
}

/// One RK4 step of `x' = V(x, t)` for all points at once.
fn rk4_step<V: VelocityField + ?Sized>(v: &V, xs: &mut [f64], sides: &[Side], t: f64, h: f64) {
    let batch = |pts: &[f64], t: f64| -> Vec<f64> {
        if pts.len() >= 256 {
            let chunks: Vec<(&[f64], &[Side])> = pts.chunks(128).zip(sides.chunks(128)).collect();
            par::map(&chunks, |(c, s)| v.velocities_from(c, s, t)).concat()
        } else {
            v.velocities_from(pts, sides, t)
        }
    };
    let k1 = batch(xs, t);
    let p: Vec<f64> = xs.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
    let k2 = batch(&p, t + 0.5 * h);
    let p: Vec<f64> = xs.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
    let k3 = batch(&p, t + 0.5 * h);
    let p: Vec<f64> = xs.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
    let k4 = batch(&p, t + h);
    for (i, x) in xs.iter_mut().enumerate() {
        *x += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Advect `r0` by `v` over `[0, T]` with `nt` RK4 steps. Returns the
/// `nt + 1` densities on the uniform time grid.
///
/// Atoms read `V` at their position. Each interior histogram edge is
/// followed twice, as the end of the cell below (limit from below) and the
/// start of the cell above (limit from above); where `V` jumps the two
/// separate and an empty cell opens between them.
///
/// Fails if two characteristics cross (by more than `CROSSING` times the
/// domain length) or one leaves the domain.
pub fn advect_density<V: VelocityField + ?Sized>(
    r0: &Density,
    v: &V,
    horizon: f64,
    nt: usize,
) -> Result<Vec<Density>> {
    check_steps(horizon, nt)?;
    let dom = r0.domain();
    let n_atoms = r0.atoms().len();
    let n_cells = r0.values().len();
    // atoms first, then (start, end) of every cell
    let mut pts: Vec<f64> = r0.atoms().iter().map(|a| a.position).collect();
    let mut sides = vec![Side::At; n_atoms];
    for w in r0.edges().windows(2) {
        pts.extend_from_slice(&[w[0], w[1]]);
        sides.extend_from_slice(&[Side::Above, Side::Below]);
    }
    let rank = |s: Side| match s {
        Side::Below => 0,
        Side::At => 1,
        Side::Above => 2,
    };
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        pts[a]
            .total_cmp(&pts[b])
            .then(rank(sides[a]).cmp(&rank(sides[b])))
            .then(a.cmp(&b))
    });
    let masses: Vec<f64> = r0.atoms().iter().map(|a| a.mass).collect();
    let cell_mass: Vec<f64> = r0.cell_masses().collect();

    let h = horizon / nt as f64;
    let tol = tolerances::CROSSING * dom.len();
    let slack = tolerances::ATOM_MERGE * dom.len();
    let mut out = Vec::with_capacity(nt + 1);
    out.push(r0.clone());
    for k in 0..nt {
        let t = k as f64 * h;
        rk4_step(v, &mut pts, &sides, t, h);
        let t1 = (k + 1) as f64 * h;
        if let Some(&x) = pts.iter().find(|&&x| !x.is_finite() || x < dom.lo - slack || x > dom.hi + slack) {
            return Err(Error::LeftDomain { t: t1, x });
        }
        for w in order.windows(2) {
            let gap = pts[w[0]] - pts[w[1]];
            if gap > tol {
                return Err(Error::CharacteristicsCrossed { t: t1, gap, tol });
            }
        }
        let atoms: Vec<Atom> = pts[..n_atoms]
            .iter()
            .zip(&masses)
            .map(|(&position, &mass)| Atom { position, mass })
            .collect();
        let mut edges = Vec::with_capacity(2 * n_cells + 1);
        let mut values = Vec::with_capacity(2 * n_cells);
        for c in 0..n_cells {
            let (a, b) = (pts[n_atoms + 2 * c], pts[n_atoms + 2 * c + 1]);
            if let Some(&last) = edges.last() {
                if a > last {
                    // torn edge: empty cell in between
                    values.push(0.0);
                    edges.push(a);
                }
            } else {
                edges.push(a);
            }
            let lo = *edges.last().unwrap();
            let width = b - lo;
            if !(width > 0.0) {
                return Err(Error::CharacteristicsCrossed { t: t1, gap: -width, tol });
            }
            values.push(cell_mass[c] / width);
            edges.push(b);
        }
        let d = Density::normalized(dom, atoms, edges, values)?;
        out.push(d);
    }
    Ok(out)
}

fn check_steps(horizon: f64, nt: usize) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(crate::error::invalid_param("horizon", format!("must be positive, got {horizon}")));
    }
    if nt == 0 {
        return Err(crate::error::invalid_param("nt", "must be at least 1"));
    }
    Ok(())
}

/// Characteristics `Phi_t(x)` from a uniform grid of starting points.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMap {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `phi[k][i] = Phi_{t_k}(x_i)`.
    pub phi: Vec<Vec<f64>>,
}

impl FlowMap {
    /// `Phi_{t_k}` at an arbitrary starting point, by linear interpolation.
    pub fn at(&self, k: usize, x: f64) -> f64 {
        let (i, w) = bracket(&self.xs, x);
        let i1 = (i + 1).min(self.xs.len() - 1);
        self.phi[k][i] * (1.0 - w) + self.phi[k][i1] * w
    }
}

/// Integrate characteristics from `nx + 1` equally spaced points of
/// `domain` over `[0, T]` with `nt` RK4 steps. Trajectories are integrated
/// independently (in parallel when enabled).
pub fn flow_map<V: VelocityField + ?Sized>(
    v: &V,
    domain: Domain,
    horizon: f64,
    nt: usize,
    nx: usize,
) -> Result<FlowMap> {
    check_steps(horizon, nt)?;
    let nx = nx.max(1);
    let xs: Vec<f64> = (0..=nx).map(|i| domain.lo + domain.len() * i as f64 / nx as f64).collect();
    let h = horizon / nt as f64;
    let ts: Vec<f64> = (0..=nt).map(|k| k as f64 * h).collect();
    let paths: Vec<Vec<f64>> = par::map(&xs, |&x0| {
        let mut path = Vec::with_capacity(nt + 1);
        let mut x = [x0];
        path.push(x0);
        for k in 0..nt {
            rk4_step(v, &mut x, &[Side::At], k as f64 * h, h);
            path.push(x[0]);
        }
        path
    });
    let tol = tolerances::CROSSING * domain.len();
    let mut phi = vec![Vec::with_capacity(xs.len()); nt + 1];
    for path in &paths {
        for (k, &x) in path.iter().enumerate() {
            phi[k].push(x);
        }
    }
    for (k, row) in phi.iter().enumerate() {
        for w in row.windows(2) {
            if w[0] - w[1] > tol {
                return Err(Error::CharacteristicsCrossed {
                    t: ts[k],
                    gap: w[0] - w[1],
                    tol,
                });
            }
        }
    }
    Ok(FlowMap { xs, ts, phi })
}

/// Points tracked by `evolve_quantile`: each knot once for the segment
/// ending there and once for the segment starting there, with the probe
/// `(z, side)` at which `U` is read. Flat segments read `U` at their middle;
/// vertical segments carry no mass and follow their neighbours.
fn knot_probes(q: &QuantileFunction) -> Vec<(f64, (f64, Side))> {
    let ks = q.knots();
    let n = ks.len();
    let seg = |i: usize, side: Side| -> Option<(f64, Side)> {
        let (a, b) = (ks[i], ks[i + 1]);
        if b.0 == a.0 {
            None
        } else if a.1 == b.1 {
            Some((0.5 * (a.0 + b.0), Side::At))
        } else if side == Side::Below {
            Some((b.0, Side::Below))
        } else {
            Some((a.0, Side::Above))
        }
    };
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let below = if i > 0 { seg(i - 1, Side::Below) } else { None };
        let above = if i + 1 < n { seg(i, Side::Above) } else { None };
        let z = ks[i].0;
        let (lo, hi) = match (below, above) {
            (Some(l), Some(h)) => (l, h),
            (Some(l), None) => (l, l),
            (None, Some(h)) => (h, h),
            // isolated vertical run; its end points move with the field
            (None, None) => ((z, Side::Below), (z, Side::Above)),
        };
        out.push((z, lo));
        out.push((z, hi));
    }
    out
}

/// Check that `u` is constant on each flat interval of `q` at time `t`.
pub fn check_input_constraint<U: QuantileVelocity + ?Sized>(q: &QuantileFunction, u: &U, t: f64) -> Result<()> {
    let mut samples = Vec::with_capacity(5 * q.flats().len());
    for f in q.flats() {
        let w = f.z_hi - f.z_lo;
        let vals: Vec<f64> = [1e-9, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&s| u.velocity(if s == 1.0 { f.z_hi } else { f.z_lo + s * w }, t))
            .collect();
        samples.push((f, vals));
    }
    let scale = samples
        .iter()
        .flat_map(|(_, v)| v.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = tolerances::INPUT_CONSTRAINT * scale;
    for (f, vals) in samples {
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi - lo > tol {
            return Err(Error::InputConstraint {
                z_lo: f.z_lo,
                z_hi: f.z_hi,
                spread: hi - lo,
                tol,
            });
        }
    }
    Ok(())
}

/// Integrate `dQ/dt = U(z, t)` from `q0` at every knot of `q0` with `nt`
/// RK4 steps (`U` does not depend on `Q`, so this is Simpson's rule per
/// step). Returns `nt + 1` quantiles. Knots are followed from both sides,
/// so a jump of `U` in `z` opens a jump of `Q`.
///
/// Rejects `u` that is not constant on the flat intervals of `q0`, and any
/// step at which the result stops being monotone.
pub fn evolve_quantile<U: QuantileVelocity + ?Sized>(
    q0: &QuantileFunction,
    u: &U,
    horizon: f64,
    nt: usize,
) -> Result<Vec<QuantileFunction>> {
    check_steps(horizon, nt)?;
    let probes = knot_probes(q0);
    let zs: Vec<f64> = probes.iter().map(|p| p.0).collect();
    let mut vals: Vec<f64> = q0.knots().iter().flat_map(|k| [k.1, k.1]).collect();
    let h = horizon / nt as f64;
    let mut out = Vec::with_capacity(nt + 1);
    out.push(q0.clone());
    let mut lo = q0.domain().lo;
    let mut hi = q0.domain().hi;
    for k in 0..nt {
        let t = k as f64 * h;
        check_input_constraint(q0, u, t)?;
        for (x, &(_, (z, side))) in vals.iter_mut().zip(&probes) {
            let a = u.velocity_from(z, t, side);
            let m = u.velocity_from(z, t + 0.5 * h, side);
            let b = u.velocity_from(z, t + h, side);
            *x += h / 6.0 * (a + 4.0 * m + b);
        }
        for &x in &vals {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let knots = zs.iter().cloned().zip(vals.iter().cloned()).collect();
        let q = QuantileFunction::from_knots(Domain::new(lo, hi)?, knots)?;
        out.push(q);
    }
    Ok(out)
}

/// `U = V o Q_R` for a density snapshot: `U(z, t) = V(Q_R(z), t)` with
/// `Q_R` frozen at the snapshot.
pub struct ComposedQuantileVelocity<'a, V: ?Sized> {
    quantile: QuantileFunction,
    v: &'a V,
}

impl<V: VelocityField + ?Sized> QuantileVelocity for ComposedQuantileVelocity<'_, V> {
    fn velocity(&self, z: f64, t: f64) -> f64 {
        self.v.velocity(self.quantile.eval(z), t)
    }
}

impl<V: ?Sized> ComposedQuantileVelocity<'_, V> {
    pub fn quantile(&self) -> &QuantileFunction {
        &self.quantile
    }
}

/// Forward transform `(R, V) -> (Q_R, V o Q_R)`.
pub fn to_quantile_coords<'a, V: VelocityField + ?Sized>(
    r: &Density,
    v: &'a V,
) -> (QuantileFunction, ComposedQuantileVelocity<'a, V>) {
    let q = quantile_of(r);
    (
        q.clone(),
        ComposedQuantileVelocity { quantile: q, v },
    )
}

/// `V = U o F_R` on the support of `R`, extended off the support by the
/// value at the nearest support point.
pub struct PulledBackVelocity<'a, U: ?Sized> {
    cdf: CdfFunction,
    /// Atom positions with the midpoint of their flat interval.
    atoms: Vec<(f64, f64)>,
    /// Closed support pieces, sorted: continuous intervals and atoms.
    support: Vec<(f64, f64)>,
    merge: f64,
    u: &'a U,
}

impl<U: QuantileVelocity + ?Sized> PulledBackVelocity<'_, U> {
    fn on_support(&self, x: f64, t: f64) -> f64 {
        let i = self.atoms.partition_point(|a| a.0 < x - self.merge);
        if let Some(&(pos, zmid)) = self.atoms.get(i) {
            if (pos - x).abs() <= self.merge {
                return self.u.velocity(zmid, t);
            }
        }
        self.u.velocity(self.cdf.eval(x), t)
    }
}

impl<U: QuantileVelocity + ?Sized> VelocityField for PulledBackVelocity<'_, U> {
    fn velocity(&self, x: f64, t: f64) -> f64 {
        let s = &self.support;
        let j = s.partition_point(|p| p.1 < x);
        if let Some(&(a, _)) = s.get(j) {
            if x >= a {
                return self.on_support(x, t);
            }
        }
        // off the support: nearest support endpoint
        let left = j.checked_sub(1).map(|i| s[i].1);
        let right = s.get(j).map(|p| p.0);
        let nearest = match (left, right) {
            (Some(l), Some(r)) => {
                if x - l <= r - x {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => x,
        };
        self.on_support(nearest, t)
    }
}

/// Inverse transform `(Q_R, U) -> V = U o F_R`, with `F_R` taken from the
/// companion density `r` (whose quantile is `q`).
///
/// On an atom, `V` takes the single value of `U` on the atom's flat
/// interval; `U` must be constant there (checked at `t = 0`).
pub fn from_quantile_coords<'a, U: QuantileVelocity + ?Sized>(
    q: &QuantileFunction,
    u: &'a U,
    r: &Density,
) -> Result<PulledBackVelocity<'a, U>> {
    check_input_constraint(q, u, 0.0)?;
    let atoms: Vec<(f64, f64)> = q
        .flats()
        .iter()
        .map(|f| (f.level, 0.5 * (f.z_lo + f.z_hi)))
        .collect();
    let mut support: Vec<(f64, f64)> = r.continuous_support();
    support.extend(atoms.iter().map(|a| (a.0, a.0)));
    support.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(support.len());
    for p in support {
        match merged.last_mut() {
            Some(last) if p.0 <= last.1 => last.1 = last.1.max(p.1),
            _ => merged.push(p),
        }
    }
    Ok(PulledBackVelocity {
        cdf: cdf_of(r),
        atoms,
        support: merged,
        merge: tolerances::ATOM_MERGE * r.domain().len(),
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(-10.0, 10.0).unwrap()
    }

    fn mixed() -> Density {
        Density::new(
            dom(),
            vec![Atom { position: 3.0, mass: 0.3 }, Atom { position: -1.0, mass: 0.2 }],
            vec![-2.0, 0.0, 1.0, 2.0],
            vec![0.1, 0.0, 0.3],
        )
        .unwrap()
    }

    #[test]
    fn zero_field_is_stationary() {
        let r = mixed();
        let out = advect_density(&r, &Rule(|_x: f64, _t: f64| 0.0), 1.0, 10).unwrap();
        assert!(out.iter().all(|d| d == &r));
    }

    #[test]
    fn constant_field_translates() {
        let r = mixed();
        let out = advect_density(&r, &Rule(|_x: f64, _t: f64| 0.5), 2.0, 20).unwrap();
        let last = out.last().unwrap();
        assert!((last.atoms()[0].position - 0.0).abs() < 1e-12);
        assert!((last.atoms()[1].position - 4.0).abs() < 1e-12);
        assert!((last.total_mass() - 1.0).abs() < 1e-12);
        assert!((last.edges()[0] - -1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_is_conserved_under_compression() {
        let r = mixed();
        let out = advect_density(&r, &Rule(|x: f64, t: f64| -x * (1.0 + t)), 1.0, 200).unwrap();
        for d in &out {
            assert!((d.total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn crossing_is_detected() {
        let r = Density::from_atoms(dom(), &[(0.45, 0.5), (0.5, 0.5)]).unwrap();
        // discontinuous field and one huge step: the left atom jumps past the right one
        let v = Rule(|x: f64, _t: f64| if x < 0.5 { 1.0 } else { 0.0 });
        assert!(matches!(
            advect_density(&r, &v, 1.0, 1),
            Err(Error::CharacteristicsCrossed { .. })
        ));
    }

    #[test]
    fn linear_sink_flow_map() {
        let fm = flow_map(&Rule(|x: f64, _t: f64| -x), Domain::new(0.0, 2.0).unwrap(), 1.0, 1000, 20).unwrap();
        assert_eq!(fm.phi[0], fm.xs);
        let mut err: f64 = 0.0;
        for (k, &t) in fm.ts.iter().enumerate() {
            for (i, &x) in fm.xs.iter().enumerate() {
                err = err.max((fm.phi[k][i] - x * (-t).exp()).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn evolve_with_constant_velocity() {
        let q0 = quantile_of(&mixed());
        let out = evolve_quantile(&q0, &Rule(|_z: f64, _t: f64| 1.0), 1.5, 15).unwrap();
        let last = out.last().unwrap();
        for z in [0.0, 0.1, 0.33, 0.5, 0.77, 1.0] {
            assert!((last.eval(z) - q0.eval(z) - 1.5).abs() < 1e-12);
        }
        let still = evolve_quantile(&q0, &Rule(|_z: f64, _t: f64| 0.0), 1.0, 4).unwrap();
        assert_eq!(still.last().unwrap(), &q0);
    }

    #[test]
    fn input_constraint_rejects_spread_on_flat() {
        let q0 = quantile_of(&Density::dirac(dom(), 1.0).unwrap());
        let r = evolve_quantile(&q0, &Rule(|z: f64, _t: f64| z), 1.0, 4);
        assert!(matches!(r, Err(Error::InputConstraint { .. })));
    }

    #[test]
    fn transform_of_identity_field() {
        let r = Density::uniform(Domain::new(0.0, 1.0).unwrap());
        let v = Rule(|x: f64, _t: f64| x);
        let (q, u) = to_quantile_coords(&r, &v);
        for z in [0.0, 0.2, 0.5, 1.0] {
            assert!((u.velocity(z, 0.0) - q.eval(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn two_atom_pull_back_is_step() {
        let r = Density::from_atoms(dom(), &[(-1.0, 0.4), (2.0, 0.6)]).unwrap();
        let q = quantile_of(&r);
        let u = Rule(|z: f64, _t: f64| if z <= 0.4 { -3.0 } else { 5.0 });
        let v = from_quantile_coords(&q, &u, &r).unwrap();
        assert_eq!(v.velocity(-1.0, 0.0), -3.0);
        assert_eq!(v.velocity(2.0, 0.0), 5.0);
        assert_eq!(v.velocity(0.0, 0.0), -3.0);
        assert_eq!(v.velocity(1.5, 0.0), 5.0);
        assert_eq!(v.velocity(-9.0, 0.0), -3.0);
    }

    #[test]
    fn round_trip_on_support() {
        let r = mixed();
        let v = Rule(|x: f64, t: f64| (x * 0.7).sin() + t);
        let (q, u) = to_quantile_coords(&r, &v);
        let back = from_quantile_coords(&q, &u, &r).unwrap();
        // r-a.e.: the left end of a support piece after a gap is excluded
        for x in [-2.0, -1.5, -1.0, -0.1, 0.0, 1.05, 1.2, 1.9, 2.0, 3.0] {
            assert!((back.velocity(x, 0.3) - VelocityField::velocity(&v, x, 0.3)).abs() < 1e-12, "x={x}");
        }
    }

    /// Moves left of zero at unit speed, right of zero at rest.
    struct Split;

    impl VelocityField for Split {
        fn velocity(&self, x: f64, _t: f64) -> f64 {
            if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }

        fn velocity_from(&self, x: f64, t: f64, side: Side) -> f64 {
            if x == 0.0 && side == Side::Below {
                -1.0
            } else {
                VelocityField::velocity(self, x, t)
            }
        }
    }

    impl QuantileVelocity for Split {
        fn velocity(&self, z: f64, t: f64) -> f64 {
            VelocityField::velocity(self, z - 0.5, t)
        }

        fn velocity_from(&self, z: f64, t: f64, side: Side) -> f64 {
            VelocityField::velocity_from(self, z - 0.5, t, side)
        }
    }

    #[test]
    fn jump_in_velocity_tears_the_density() {
        let r = Density::new(dom(), vec![], vec![-1.0, 0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let out = advect_density(&r, &Split, 1.0, 10).unwrap();
        let last = out.last().unwrap();
        assert_eq!(last.edges().len(), 4);
        assert!((last.edges()[1] + 1.0).abs() < 1e-12);
        assert_eq!(last.values()[1], 0.0);
    }

    #[test]
    fn jump_in_quantile_velocity_opens_a_gap() {
        let q0 = QuantileFunction::from_knots(dom(), vec![(0.0, -0.5), (1.0, 0.5)]).unwrap();
        let q0 = QuantileFunction::from_knots(dom(), vec![(0.0, -0.5), (0.5, q0.eval(0.5)), (1.0, 0.5)]).unwrap();
        let q1 = evolve_quantile(&q0, &Split, 1.0, 10).unwrap().pop().unwrap();
        assert!((q1.eval(0.5) + 1.0).abs() < 1e-12);
        assert!((q1.eval(0.5 + 1e-9) - 0.0).abs() < 1e-6);
    }
}
