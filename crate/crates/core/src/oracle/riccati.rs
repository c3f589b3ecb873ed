//! Discrete-time references for the scalar tracking problem.

use crate::error::{invalid_param, Result};

/// Backward RK4 integration of `p' = p^2 / alpha^2 - 1`, `p(T) = 0`, with
/// `nt` steps. Returns `p` at `t_k = k T / nt`.
pub fn riccati_rk4(alpha: f64, horizon: f64, nt: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && horizon > 0.0 && nt > 0) {
        return Err(invalid_param("alpha", "alpha, horizon and nt must be positive"));
    }
    let h = horizon / nt as f64;
    let a2 = alpha * alpha;
    // in reversed time s = T - t: dp/ds = 1 - p^2 / alpha^2
    let f = |p: f64| 1.0 - p * p / a2;
    let mut p = vec![0.0; nt + 1];
    let mut x = 0.0;
    for k in (0..nt).rev() {
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        p[k] = x;
    }
    Ok(p)
}

/// Optimum of the discrete problem
/// `min sum_n dt ((r_n - d_n)^2 + alpha^2 u_n^2)`, `r_{n+1} = r_n + dt u_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLQ {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub cost: f64,
}

/// Backward Riccati recursion at step `T / nt` for demand samples `d`
/// (`nt + 1` values; the last one is unused).
pub fn discrete_lq(alpha: f64, horizon: f64, r0: f64, d: &[f64]) -> Result<DiscreteLQ> {
    if d.len() < 2 || !(alpha > 0.0 && horizon > 0.0) {
        return Err(invalid_param("d", "need alpha, horizon > 0 and at least two samples"));
    }
    let nt = d.len() - 1;
    let h = horizon / nt as f64;
    let a2 = alpha * alpha;
    // value function V_n(x) = P_n x^2 + 2 q_n x + c_n
    let mut pq = vec![(0.0, 0.0); nt + 1];
    let (mut pn, mut qn, mut cn) = (0.0, 0.0, 0.0);
    for n in (0..nt).rev() {
        let den = a2 + h * pn;
        let (p1, q1) = (pn, qn);
        pn = h + p1 * a2 / den;
        qn = -h * d[n] + q1 * a2 / den;
        cn = h * d[n] * d[n] + cn - h * q1 * q1 / den;
        pq[n] = (p1, q1);
    }
    let cost = pn * r0 * r0 + 2.0 * qn * r0 + cn;
    let mut r = Vec::with_capacity(nt + 1);
    let mut u = Vec::with_capacity(nt);
    let mut x = r0;
    r.push(x);
    for &(p1, q1) in pq.iter().take(nt) {
        let un = -(p1 * x + q1) / (a2 + h * p1);
        x += h * un;
        u.push(un);
        r.push(x);
    }
    Ok(DiscreteLQ { r, u, cost })
}
