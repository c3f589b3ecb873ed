//! Scalar finite-horizon LQ tracking.
//!
//! Minimizes `int_0^T (r - d)^2 + alpha^2 u^2 dt` subject to `r' = u`,
//! `r(0) = r0`. The optimal control is `u = -(p r + y) / alpha^2` with the
//! Riccati solution `p(t) = alpha tanh((T - t) / alpha)` and the
//! anti-causal feedforward `y' = p y / alpha^2 + d`, `y(T) = 0`.
//!
//! The demand `d` is sampled on a uniform grid and interpolated linearly.
//! On each step the feedforward and the closed-loop state then have closed
//! forms, so the solution can be evaluated exactly at any time, and the cost
//! is integrated with five-point Gauss-Legendre on every step.

use crate::error::{invalid_param, Result};
use crate::quadrature::gauss5;

/// Tradeoff weight, horizon and number of time steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LQParams {
    pub alpha: f64,
    pub horizon: f64,
    /// Number of steps; the grid has `nt + 1` points.
    pub nt: usize,
}

impl LQParams {
    pub fn new(alpha: f64, horizon: f64, nt: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid_param("alpha", format!("must be positive, got {alpha}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid_param("horizon", format!("must be positive, got {horizon}")));
        }
        if nt < 2 {
            return Err(invalid_param("nt", format!("must be at least 2, got {nt}")));
        }
        Ok(LQParams { alpha, horizon, nt })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    /// Uniform grid `t_k = k T / nt`, `k = 0..=nt`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.dt();
        let mut t: Vec<f64> = (0..=self.nt).map(|k| k as f64 * h).collect();
        t[self.nt] = self.horizon;
        t
    }

    /// `(T - t) / alpha`.
    fn a(&self, t: f64) -> f64 {
        (self.horizon - t) / self.alpha
    }
}

/// `ln cosh x`, stable for large `|x|`.
pub fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// `cosh(a) / cosh(b)` without overflow.
fn cosh_ratio(a: f64, b: f64) -> f64 {
    (log_cosh(a) - log_cosh(b)).exp()
}

/// `cosh(a) / cosh(b) * sinh(s)` for `s >= 0`, without overflow.
fn cosh_ratio_sinh(a: f64, b: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let log_sinh = if s < 1.0 {
        s.sinh().ln()
    } else {
        s + (-(-2.0 * s).exp()).ln_1p() - std::f64::consts::LN_2
    };
    (log_cosh(a) - log_cosh(b) + log_sinh).exp()
}

/// Closed-form Riccati solution `p(t) = alpha tanh((T - t) / alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Riccati {
    pub alpha: f64,
    pub horizon: f64,
}

impl Riccati {
    pub fn p(&self, t: f64) -> f64 {
        self.alpha * ((self.horizon - t) / self.alpha).tanh()
    }

    /// `dp/dt = p^2 / alpha^2 - 1`.
    pub fn p_dot(&self, t: f64) -> f64 {
        let p = self.p(t);
        p * p / (self.alpha * self.alpha) - 1.0
    }
}

pub fn riccati(params: &LQParams) -> Riccati {
    Riccati {
        alpha: params.alpha,
        horizon: params.horizon,
    }
}

/// Closed-loop state transition `phi_r(t, tau) = cosh((T-t)/alpha) / cosh((T-tau)/alpha)`.
pub fn transition_r(params: &LQParams, t: f64, tau: f64) -> f64 {
    cosh_ratio(params.a(t), params.a(tau))
}

/// Feedforward transition `phi_y(t, tau) = 1 / phi_r(t, tau)`.
pub fn transition_y(params: &LQParams, t: f64, tau: f64) -> f64 {
    cosh_ratio(params.a(tau), params.a(t))
}

/// Per-step data of the piecewise-linear feedforward solution: demand slope
/// `b_k` and homogeneous coefficient `c_k`, with
/// `y(t) = -p d - alpha^2 b_k + c_k phi_y(t, t_{k+1})` on step `k`.
#[derive(Clone, Debug, PartialEq)]
struct Feedforward {
    y: Vec<f64>,
    slope: Vec<f64>,
    coef: Vec<f64>,
}

fn feedforward_steps(params: &LQParams, d: &[f64]) -> Feedforward {
    let n = params.nt;
    let h = params.dt();
    let a2 = params.alpha * params.alpha;
    let t = params.grid();
    let ric = riccati(params);
    let mut y = vec![0.0; n + 1];
    let mut slope = vec![0.0; n];
    let mut coef = vec![0.0; n];
    for k in (0..n).rev() {
        let b = (d[k + 1] - d[k]) / h;
        let c = y[k + 1] + ric.p(t[k + 1]) * d[k + 1] + a2 * b;
        slope[k] = b;
        coef[k] = c;
        y[k] = -ric.p(t[k]) * d[k] - a2 * b + c * transition_y(params, t[k], t[k + 1]);
    }
    Feedforward { y, slope, coef }
}

/// Feedforward `y(t) = int_T^t phi_y(t, tau) d(tau) dtau` on the grid, for
/// `d` interpolated linearly between samples. Exact for that interpolant.
pub fn feedforward(params: &LQParams, d: &[f64]) -> Result<Vec<f64>> {
    check_samples(params, d)?;
    Ok(feedforward_steps(params, d).y)
}

fn check_samples(params: &LQParams, d: &[f64]) -> Result<()> {
    if d.len() != params.nt + 1 {
        return Err(invalid_param(
            "d",
            format!("expected {} samples, got {}", params.nt + 1, d.len()),
        ));
    }
    if let Some(v) = d.iter().find(|v| !v.is_finite()) {
        return Err(invalid_param("d", format!("non-finite sample {v}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
enum Form {
    /// Linear interpolation of sampled demand; per-step data.
    PiecewiseLinear { slope: Vec<f64>, coef: Vec<f64> },
    /// Constant demand: `y = -p d`, `r = d + phi_r(t, 0) (r0 - d)`.
    Static,
}

/// Optimal trajectory of one scalar tracking problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarLQSolution {
    params: LQParams,
    form: Form,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    /// `int_0^T (r - d)^2 + alpha^2 u^2 dt`.
    pub cost: f64,
}

/// Solve the scalar tracking problem for demand samples `d` on
/// `params.grid()`.
pub fn solve_scalar(params: &LQParams, r0: f64, d: &[f64]) -> Result<ScalarLQSolution> {
    check_samples(params, d)?;
    if !r0.is_finite() {
        return Err(invalid_param("r0", format!("non-finite initial state {r0}")));
    }
    let n = params.nt;
    let h = params.dt();
    let ff = feedforward_steps(params, d);
    let t = params.grid();
    let ric = riccati(params);
    let p: Vec<f64> = t.iter().map(|&s| ric.p(s)).collect();

    // error e = r - d propagated step by step in closed form
    let mut r = vec![0.0; n + 1];
    let mut e = r0 - d[0];
    r[0] = r0;
    for k in 0..n {
        let phi = transition_r(params, t[k + 1], t[k]);
        let drive = cosh_ratio_sinh(params.a(t[k + 1]), params.a(t[k]), h / params.alpha);
        e = phi * e - ff.coef[k] / params.alpha * drive;
        r[k + 1] = d[k + 1] + e;
    }
    let a2 = params.alpha * params.alpha;
    let u: Vec<f64> = (0..=n).map(|k| -(p[k] * r[k] + ff.y[k]) / a2).collect();
    let mut sol = ScalarLQSolution {
        params: *params,
        form: Form::PiecewiseLinear {
            slope: ff.slope,
            coef: ff.coef,
        },
        t,
        p,
        y: ff.y,
        r,
        u,
        d: d.to_vec(),
        cost: 0.0,
    };
    sol.cost = sol.integrate_cost();
    Ok(sol)
}

/// Solve with a constant demand `d`, using the closed forms
/// `y = -p d` and `r = phi_r(t, 0) r0 + (1 - phi_r(t, 0)) d`; the cost is
/// `(r0 - d)^2 alpha tanh(T / alpha)`.
pub fn solve_static(params: &LQParams, r0: f64, d: f64) -> Result<ScalarLQSolution> {
    if !(r0.is_finite() && d.is_finite()) {
        return Err(invalid_param("r0", "initial state and demand must be finite"));
    }
    let t = params.grid();
    let ric = riccati(params);
    let a2 = params.alpha * params.alpha;
    let p: Vec<f64> = t.iter().map(|&s| ric.p(s)).collect();
    let y: Vec<f64> = p.iter().map(|&pk| -pk * d).collect();
    let r: Vec<f64> = t
        .iter()
        .map(|&s| {
            let phi = transition_r(params, s, 0.0);
            phi * r0 + (1.0 - phi) * d
        })
        .collect();
    let u: Vec<f64> = r.iter().zip(&p).map(|(&rk, &pk)| -pk * (rk - d) / a2).collect();
    let cost = (r0 - d) * (r0 - d) * params.alpha * (params.horizon / params.alpha).tanh();
    Ok(ScalarLQSolution {
        params: *params,
        form: Form::Static,
        d: vec![d; t.len()],
        t,
        p,
        y,
        r,
        u,
        cost,
    })
}

impl ScalarLQSolution {
    pub fn params(&self) -> &LQParams {
        &self.params
    }

    pub fn r0(&self) -> f64 {
        self.r[0]
    }

    /// Step containing `t` and the clamped time.
    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(0.0, self.params.horizon);
        let k = ((t / self.params.dt()).floor() as usize).min(self.params.nt - 1);
        (k, t)
    }

    /// Linearly interpolated demand.
    pub fn demand_at(&self, t: f64) -> f64 {
        match &self.form {
            Form::Static => self.d[0],
            Form::PiecewiseLinear { slope, .. } => {
                let (k, t) = self.locate(t);
                self.d[k] + slope[k] * (t - self.t[k])
            }
        }
    }

    pub fn feedforward_at(&self, t: f64) -> f64 {
        let pt = riccati(&self.params).p(t.clamp(0.0, self.params.horizon));
        match &self.form {
            Form::Static => -pt * self.d[0],
            Form::PiecewiseLinear { slope, coef } => {
                let (k, t) = self.locate(t);
                let a2 = self.params.alpha * self.params.alpha;
                -pt * self.demand_at(t) - a2 * slope[k]
                    + coef[k] * transition_y(&self.params, t, self.t[k + 1])
            }
        }
    }

    pub fn state_at(&self, t: f64) -> f64 {
        match &self.form {
            Form::Static => {
                let phi = transition_r(&self.params, t.clamp(0.0, self.params.horizon), 0.0);
                phi * self.r[0] + (1.0 - phi) * self.d[0]
            }
            Form::PiecewiseLinear { coef, .. } => {
                let (k, t) = self.locate(t);
                let pr = &self.params;
                let ek = self.r[k] - self.d[k];
                let e = transition_r(pr, t, self.t[k]) * ek
                    - coef[k] / pr.alpha * cosh_ratio_sinh(pr.a(self.t[k + 1]), pr.a(self.t[k]), pr.a(self.t[k]) - pr.a(t));
                self.demand_at(t) + e
            }
        }
    }

    /// `u = -(p r + y) / alpha^2`.
    pub fn control_at(&self, t: f64) -> f64 {
        let pt = riccati(&self.params).p(t.clamp(0.0, self.params.horizon));
        -(pt * self.state_at(t) + self.feedforward_at(t)) / (self.params.alpha * self.params.alpha)
    }

    /// Five-point Gauss-Legendre nodes on every step.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        self.t.windows(2).flat_map(|w| gauss5(w[0], w[1])).collect()
    }

    fn integrate_cost(&self) -> f64 {
        let a2 = self.params.alpha * self.params.alpha;
        self.quadrature_nodes()
            .into_iter()
            .map(|(s, w)| {
                let e = self.state_at(s) - self.demand_at(s);
                let u = self.control_at(s);
                w * (e * e + a2 * u * u)
            })
            .sum()
    }

    /// Cost of the trajectory over `[0, T]` re-integrated by Gauss-Legendre,
    /// regardless of how `cost` was obtained.
    pub fn quadrature_cost(&self) -> f64 {
        self.integrate_cost()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, horizon: f64, nt: usize) -> LQParams {
        LQParams::new(alpha, horizon, nt).unwrap()
    }

    #[test]
    fn riccati_endpoint_and_value() {
        let pr = params(2.0, 10.0, 1000);
        let ric = riccati(&pr);
        assert_eq!(ric.p(10.0), 0.0);
        assert!((ric.p(0.0) - 2.0 * 5f64.tanh()).abs() < 1e-15);
        assert!((ric.p(0.0) - 1.999_818_4).abs() < 1e-6);
    }

    #[test]
    fn transition_values() {
        let pr = params(2.0, 10.0, 1000);
        assert_eq!(transition_r(&pr, 3.0, 3.0), 1.0);
        assert!((transition_r(&pr, 10.0, 0.0) - 1.0 / 5f64.cosh()).abs() < 1e-15);
        assert!((transition_r(&pr, 10.0, 0.0) - 0.013_475_2).abs() < 1e-7);
        let prod = transition_r(&pr, 7.0, 4.0) * transition_r(&pr, 4.0, 1.0);
        assert!((prod - transition_r(&pr, 7.0, 1.0)).abs() < 1e-15);
        assert!((transition_y(&pr, 7.0, 1.0) * transition_r(&pr, 7.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_space_ratios_do_not_overflow() {
        let pr = params(0.01, 100.0, 1000);
        let v = transition_r(&pr, 100.0, 0.0);
        assert!(v >= 0.0 && v < 1e-300);
        assert!(log_cosh(1e4).is_finite());
        let s = cosh_ratio_sinh(900.0, 900.5, 0.5);
        assert!((s - (-0.5f64).exp() * 0.5f64.sinh()).abs() < 1e-12);
    }

    #[test]
    fn constant_demand_feedforward_is_minus_p_d() {
        let pr = params(0.7, 3.0, 300);
        let y = feedforward(&pr, &vec![1.5; 301]).unwrap();
        let ric = riccati(&pr);
        for (k, t) in pr.grid().iter().enumerate() {
            assert!((y[k] + ric.p(*t) * 1.5).abs() < 1e-13);
        }
        assert_eq!(y[300], 0.0);
    }

    #[test]
    fn already_at_target() {
        let pr = params(1.0, 2.0, 100);
        let s = solve_scalar(&pr, 0.4, &vec![0.4; 101]).unwrap();
        assert!(s.r.iter().all(|&r| (r - 0.4).abs() < 1e-15));
        assert!(s.u.iter().all(|&u| u.abs() < 1e-14));
        assert!(s.cost.abs() < 1e-25);
    }

    #[test]
    fn static_cost_closed_form() {
        for &(alpha, horizon) in &[(2.0, 10.0), (0.1, 1.0), (5.0, 0.5)] {
            let pr = params(alpha, horizon, 500);
            let s = solve_scalar(&pr, 1.0, &vec![-0.5; 501]).unwrap();
            let exact = 2.25 * alpha * (horizon / alpha).tanh();
            assert!((s.cost - exact).abs() < 1e-10 * exact, "{alpha} {horizon}");
            let st = solve_static(&pr, 1.0, -0.5).unwrap();
            assert!((st.cost - exact).abs() < 1e-14 * exact);
            assert!((st.quadrature_cost() - exact).abs() < 1e-10 * exact);
            for k in 0..=500 {
                assert!((s.r[k] - st.r[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn control_law_and_boundary_conditions() {
        let pr = params(0.5, 4.0, 400);
        let d: Vec<f64> = pr.grid().iter().map(|t| (1.3 * t).sin() + 0.2 * t).collect();
        let s = solve_scalar(&pr, 2.0, &d).unwrap();
        assert_eq!(s.p[400], 0.0);
        assert_eq!(s.y[400], 0.0);
        assert_eq!(s.r[0], 2.0);
        for k in 0..=400 {
            let u = -(s.p[k] * s.r[k] + s.y[k]) / 0.25;
            assert!((u - s.u[k]).abs() < 1e-12);
            assert!((s.state_at(s.t[k]) - s.r[k]).abs() < 1e-12);
        }
        // dynamics residual via central differences of the intra-step form
        let eps = 1e-5;
        for &t in &[0.3, 1.234, 2.5, 3.9] {
            let rdot = (s.state_at(t + eps) - s.state_at(t - eps)) / (2.0 * eps);
            assert!((rdot - s.control_at(t)).abs() < 1e-6, "t={t}");
            // feedforward ODE y' = p y / alpha^2 + d
            let ydot = (s.feedforward_at(t + eps) - s.feedforward_at(t - eps)) / (2.0 * eps);
            let p = riccati(&pr).p(t);
            assert!((ydot - (p * s.feedforward_at(t) / 0.25 + s.demand_at(t))).abs() < 1e-6);
        }
    }

    #[test]
    fn value_function_identity() {
        // J = p(0) r0^2 + 2 y(0) r0 + int_0^T (d^2 - y^2 / alpha^2) dt
        let pr = params(0.8, 5.0, 500);
        let d: Vec<f64> = pr.grid().iter().map(|t| (0.9 * t).cos() * 2.0).collect();
        let s = solve_scalar(&pr, -1.0, &d).unwrap();
        let tail: f64 = s
            .quadrature_nodes()
            .into_iter()
            .map(|(t, w)| {
                let y = s.feedforward_at(t);
                let dd = s.demand_at(t);
                w * (dd * dd - y * y / 0.64)
            })
            .sum();
        let j = s.p[0] + 2.0 * s.y[0] * -1.0 + tail;
        assert!((j - s.cost).abs() < 1e-9 * s.cost.max(1.0), "{j} vs {}", s.cost);
    }

    #[test]
    fn long_horizon_sinusoid_matches_steady_state() {
        // interior y solves y' = y / alpha + d: y = -alpha (sin + alpha w cos) / (1 + a^2 w^2)
        let alpha = 0.5;
        let w = 2.0;
        let pr = params(alpha, 40.0, 8000);
        let d: Vec<f64> = pr.grid().iter().map(|t| (w * t).sin()).collect();
        let y = feedforward(&pr, &d).unwrap();
        let g = 1.0 + alpha * alpha * w * w;
        for (k, t) in pr.grid().iter().enumerate().skip(2000).take(4000) {
            let ss = -alpha * ((w * t).sin() + alpha * w * (w * t).cos()) / g;
            assert!((y[k] - ss).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn order_is_preserved() {
        let pr = params(0.3, 3.0, 300);
        let d1: Vec<f64> = pr.grid().iter().map(|t| (3.0 * t).sin()).collect();
        let d2: Vec<f64> = d1.iter().map(|v| v + 0.01).collect();
        let a = solve_scalar(&pr, -0.2, &d1).unwrap();
        let b = solve_scalar(&pr, -0.19, &d2).unwrap();
        assert!(a.r.iter().zip(&b.r).all(|(x, y)| x < y));
    }
}
