use super::DemandSignal;
use crate::error::{Error, Result};
use crate::measures::{quantile_of, wasserstein2, Density};
use crate::quadrature::{gauss5, trapezoid};
use crate::transport::VelocityField;
use crate::{par, tolerances};

/// Realized cost terms of one time slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceCost {
    pub t: f64,
    /// `W2^2(R_t, D_t)`.
    pub w2_sq: f64,
    /// `int V^2 dR_t`.
    pub motion_x: f64,
    /// `int_0^1 (V o Q_R)^2 dz`.
    pub motion_z: f64,
}

/// Time integrals of the realized slices (trapezoid in time).
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedCost {
    pub slices: Vec<SliceCost>,
    pub assignment: f64,
    pub motion: f64,
    pub total: f64,
}

/// `int V^2 dR` with atoms exact and five-point Gauss-Legendre on each
/// histogram cell.
fn motion_in_x<V: VelocityField + ?Sized>(r: &Density, v: &V, t: f64) -> f64 {
    let atoms: Vec<f64> = r.atoms().iter().map(|a| a.position).collect();
    let va = v.velocities(&atoms, t);
    let mut s: f64 = r.atoms().iter().zip(&va).map(|(a, u)| a.mass * u * u).sum();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for (w, &rho) in r.edges().windows(2).zip(r.values()) {
        if rho > 0.0 {
            for (x, wt) in gauss5(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt * rho);
            }
        }
    }
    let vn = v.velocities(&nodes, t);
    s += vn.iter().zip(&weights).map(|(u, w)| w * u * u).sum::<f64>();
    s
}

/// `int_0^1 V(Q_R(z))^2 dz`: flats of `Q_R` exact, five-point
/// Gauss-Legendre in `z` on each increasing segment.
fn motion_in_z<V: VelocityField + ?Sized>(r: &Density, v: &V, t: f64) -> f64 {
    let q = quantile_of(r);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for seg in q.segments() {
        if seg.is_flat() {
            points.push(seg.q0);
            weights.push(seg.z1 - seg.z0);
        } else {
            for (z, w) in gauss5(seg.z0, seg.z1) {
                points.push(seg.at(z));
                weights.push(w);
            }
        }
    }
    let vs = v.velocities(&points, t);
    vs.iter().zip(&weights).map(|(u, w)| w * u * u).sum()
}

/// Realized cost of a density trajectory moved by `v` against `demand`.
///
/// Each slice contributes `W2^2(R_t, D_t)` and the motion energy, computed
/// both as `int V^2 dR` and as `int (V o Q_R)^2 dz`; the two must agree to
/// `MOTION_IDENTITY` (relative to the larger of 1 and the energy).
pub fn evaluate_cost<V: VelocityField + ?Sized>(
    times: &[f64],
    trajectory: &[Density],
    v: &V,
    demand: &DemandSignal,
    alpha: f64,
) -> Result<RealizedCost> {
    if times.len() != trajectory.len() || times.len() < 2 {
        return Err(Error::GridMismatch(format!(
            "{} times for {} slices",
            times.len(),
            trajectory.len()
        )));
    }
    let slices = par::map_range(times.len(), |i| -> Result<SliceCost> {
        let t = times[i];
        let r = &trajectory[i];
        let d = demand.density_at(t)?;
        let w = wasserstein2(r, &d);
        let x_form = motion_in_x(r, v, t);
        let z_form = motion_in_z(r, v, t);
        let tol = tolerances::MOTION_IDENTITY * x_form.abs().max(1.0);
        if (x_form - z_form).abs() > tol {
            return Err(Error::MotionIdentity { t, x_form, z_form, tol });
        }
        Ok(SliceCost {
            t,
            w2_sq: w * w,
            motion_x: x_form,
            motion_z: z_form,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let w2: Vec<f64> = slices.iter().map(|s| s.w2_sq).collect();
    let mz: Vec<f64> = slices.iter().map(|s| s.motion_z).collect();
    let assignment = trapezoid(times, &w2);
    let motion = trapezoid(times, &mz);
    Ok(RealizedCost {
        slices,
        assignment,
        motion,
        total: assignment + alpha * alpha * motion,
    })
}
