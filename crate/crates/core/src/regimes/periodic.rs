use super::tracks::{build_layout, FourierTrack, TrackKind, TrackPath};
use super::{CostBreakdown, OptimalControlSolution, Regime, Scenario};
use crate::error::Result;
use crate::lq::LQParams;
use crate::measures::{quantile_of, QuantileFunction};
use crate::par;
use crate::partition::{averaging_residual, build_partition};

/// One harmonic of one cell's steady-state orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicRow {
    pub cell: usize,
    pub k: usize,
    pub omega: f64,
    /// Amplitude of the averaged demand (`|c_0|` for `k = 0`, else `2 |c_k|`).
    pub demand_amplitude: f64,
    pub resource_amplitude: f64,
    pub gain: f64,
}

/// Transient from `R(0)` into the periodic orbit over `[0, 3 alpha]`:
/// each track relaxes as `r_ss(t) + (r(0) - r_ss(0)) e^{-t / alpha}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Warmup {
    pub times: Vec<f64>,
    /// One row per track.
    pub positions: Vec<Vec<f64>>,
}

/// Steady-state periodic optimum.
///
/// The averaged demand of every track is expanded in `H` harmonics over one
/// period and passed through the zero-phase filter `1 / (alpha^2 w^2 + 1)`.
/// The reported costs are averages per unit time; harmonics beyond `H` are
/// counted as untracked demand energy.
pub fn solve_periodic(scenario: &Scenario) -> Result<OptimalControlSolution> {
    scenario.validate()?;
    let period = scenario.demand.period().unwrap_or(scenario.horizon);
    let nt = scenario.grid.nt;
    let params = LQParams::new(scenario.alpha, period, nt)?;
    let times = params.grid();
    scenario.demand.check_periodic(&times[..nt])?;

    let q0 = quantile_of(&scenario.resource);
    let partition = build_partition(&q0);
    let qds: Vec<QuantileFunction> = par::map(&times[..nt], |&t| scenario.demand.quantile_at(t))
        .into_iter()
        .collect::<Result<_>>()?;
    let static_qd = scenario.demand.is_static().then(|| &qds[0]);
    let (extra, jumps) = scenario.labels(static_qd);
    let layout = build_layout(&q0, &partition, &extra, &jumps);

    let alpha = scenario.alpha;
    let harmonics = scenario.grid.n_harmonics.min((nt - 1) / 2).max(1);
    let values: Vec<Vec<f64>> = par::map(&qds, |q| layout.demand_values(q));
    let fits: Vec<FourierTrack> = par::map_range(layout.len(), |j| {
        let d: Vec<f64> = values.iter().map(|row| row[j]).collect();
        FourierTrack::fit(alpha, period, d, harmonics)
    });

    // per-pair energies of the error r - d and of the control u
    let cross = |j: usize, l: usize, weight: &dyn Fn(&FourierTrack, usize) -> f64| {
        let (a, b) = (&fits[j], &fits[l]);
        let mut s = 0.0;
        for (i, (ca, cb)) in a.coefs.iter().zip(&b.coefs).enumerate() {
            s += 2.0 * weight(a, i + 1) * (ca.0 * cb.0 + ca.1 * cb.1);
        }
        s
    };
    let err_w = |f: &FourierTrack, k: usize| (1.0 - f.gain(k)).powi(2);
    let ctl_w = |f: &FourierTrack, k: usize| (f.omega(k) * f.gain(k)).powi(2);
    let tracking = layout.l2_form(|j, l| cross(j, l, &err_w) + fits[j].tail_energy(&fits[l]));
    let motion = layout.l2_form(|j, l| cross(j, l, &ctl_w));
    let k = qds.iter().map(|q| averaging_residual(q, &partition)).sum::<f64>() / nt as f64;
    let cost = CostBreakdown::new(tracking, motion, k, alpha);

    let mut table = Vec::new();
    for (t, f) in layout.tracks.iter().zip(&fits) {
        if let TrackKind::Cell(cell) = t.kind {
            table.push(HarmonicRow {
                cell,
                k: 0,
                omega: 0.0,
                demand_amplitude: f.mean.abs(),
                resource_amplitude: f.mean.abs(),
                gain: 1.0,
            });
            for (i, c) in f.coefs.iter().enumerate() {
                let amp = 2.0 * c.0.hypot(c.1);
                let g = f.gain(i + 1);
                table.push(HarmonicRow {
                    cell,
                    k: i + 1,
                    omega: f.omega(i + 1),
                    demand_amplitude: amp,
                    resource_amplitude: g * amp,
                    gain: g,
                });
            }
        }
    }

    let dt = period / nt as f64;
    let steps = ((3.0 * alpha / dt).ceil() as usize).max(1);
    let w_times: Vec<f64> = (0..=steps).map(|m| 3.0 * alpha * m as f64 / steps as f64).collect();
    let positions = layout
        .tracks
        .iter()
        .zip(&fits)
        .map(|(t, f)| {
            let offset = t.r0 - f.state_at(0.0);
            w_times.iter().map(|&s| f.state_at(s) + offset * (-s / alpha).exp()).collect()
        })
        .collect();

    let paths = fits.into_iter().map(TrackPath::Periodic).collect();
    let mut sol = OptimalControlSolution::assemble(Regime::Periodic, scenario, period, times, partition, layout, paths, cost)?;
    sol.harmonics = table;
    sol.warmup = Some(Warmup { times: w_times, positions });
    Ok(sol)
}
