use super::tracks::{build_layout, TrackPath};
use super::{CostBreakdown, OptimalControlSolution, Regime, Scenario};
use crate::error::Result;
use crate::lq::{solve_scalar, LQParams};
use crate::measures::{quantile_of, QuantileFunction};
use crate::par;
use crate::partition::{build_partition, limit_constant};

/// Optimum for an arbitrary demand on `[0, T]`.
///
/// The demand is sampled on the time grid, averaged over the level sets of
/// `Q_R0`, and each track solves its own scalar tracking problem. The cost
/// is the sum of the track costs plus the averaging constant `K`.
pub fn solve_general(scenario: &Scenario) -> Result<OptimalControlSolution> {
    scenario.validate()?;
    scenario.demand.check_coverage(scenario.horizon)?;
    let params = LQParams::new(scenario.alpha, scenario.horizon, scenario.grid.nt)?;
    let times = params.grid();
    let q0 = quantile_of(&scenario.resource);
    let partition = build_partition(&q0);

    let qds: Vec<QuantileFunction> = par::map(&times, |&t| scenario.demand.quantile_at(t))
        .into_iter()
        .collect::<Result<_>>()?;
    let static_qd = scenario.demand.is_static().then(|| &qds[0]);
    let (extra, jumps) = scenario.labels(static_qd);
    let layout = build_layout(&q0, &partition, &extra, &jumps);

    let values: Vec<Vec<f64>> = par::map(&qds, |q| layout.demand_values(q));
    let paths = par::map_range(layout.len(), |j| {
        let d: Vec<f64> = values.iter().map(|row| row[j]).collect();
        solve_scalar(&params, layout.tracks[j].r0, &d).map(TrackPath::Finite)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let k = limit_constant(&times, &qds, &partition);
    let mut sol = OptimalControlSolution::assemble(
        Regime::General,
        scenario,
        scenario.horizon,
        times,
        partition,
        layout,
        paths,
        CostBreakdown::new(0.0, 0.0, k, scenario.alpha),
    )?;
    let (tracking, motion) = sol.integrate_tracks();
    sol.cost = CostBreakdown::new(tracking, motion, k, scenario.alpha);
    Ok(sol)
}
