use super::tracks::{build_layout, TrackPath};
use super::{CostBreakdown, DemandSignal, OptimalControlSolution, Regime, Scenario};
use crate::error::{invalid_param, Result};
use crate::lq::{self, log_cosh, LQParams};
use crate::measures::{quantile_of, wasserstein2};
use crate::partition::{averaged_density, averaging_residual, build_partition};

/// `int_0^T phi_r(t, 0)^2 dt` with `phi_r(t, 0) = cosh((T - t)/alpha) / cosh(T/alpha)`,
/// i.e. `alpha (a / (2 cosh^2 a) + tanh(a) / 2)` with `a = T / alpha`.
fn decay_energy(alpha: f64, horizon: f64) -> f64 {
    let a = horizon / alpha;
    alpha * (0.5 * a * (-2.0 * log_cosh(a)).exp() + 0.5 * a.tanh())
}

/// Closed-form optimum for a time-invariant demand `D`.
///
/// Every cell moves exponentially towards its averaged demand and the cost
/// is `W2^2(R0, D_bar) alpha tanh(T / alpha) + T W2^2(D, D_bar)`, where
/// `D_bar` is `D` averaged over the level sets of `Q_R0`.
pub fn solve_static(scenario: &Scenario) -> Result<OptimalControlSolution> {
    scenario.validate()?;
    let DemandSignal::Static(demand) = &scenario.demand else {
        return Err(invalid_param("demand", "the static solver needs a time-invariant demand"));
    };
    let params = LQParams::new(scenario.alpha, scenario.horizon, scenario.grid.nt)?;
    let q0 = quantile_of(&scenario.resource);
    let partition = build_partition(&q0);
    let qd = quantile_of(demand);
    let (extra, jumps) = scenario.labels(Some(&qd));
    let layout = build_layout(&q0, &partition, &extra, &jumps);
    let paths = layout
        .tracks
        .iter()
        .map(|t| lq::solve_static(&params, t.r0, t.demand(&qd)).map(TrackPath::Finite))
        .collect::<Result<Vec<_>>>()?;

    let dom = scenario.domain()?;
    let averaged = averaged_density(&demand.with_domain(dom)?, &partition)?;
    let w = wasserstein2(&scenario.resource.with_domain(dom)?, &averaged);
    let w_sq = w * w;
    let (alpha, horizon) = (scenario.alpha, scenario.horizon);
    let k = horizon * averaging_residual(&qd, &partition);
    let decay = decay_energy(alpha, horizon);
    let total_gain = alpha * (horizon / alpha).tanh();
    let motion = w_sq * (total_gain - decay) / (alpha * alpha);
    let cost = CostBreakdown::new(w_sq * decay, motion, k, alpha);

    OptimalControlSolution::assemble(Regime::Static, scenario, horizon, params.grid(), partition, layout, paths, cost)
}
