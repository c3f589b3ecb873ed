mod common;

use common::*;
use proptest::prelude::*;
use quantrack::lq::{solve_scalar, LQParams};
use quantrack::measures::{Density, Domain};
use quantrack::oracle::{direct_optimal_control, discrete_lq, DirectConfig, DiscreteInstance};
use quantrack::regimes::{solve_general, solve_periodic, solve_static, DemandSignal, Grid, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn static_closed_form_agrees_with_general_solver() {
    let sc = static_scenario(1000);
    let a = solve_static(&sc).unwrap();
    let b = solve_general(&sc).unwrap();
    let rel = (a.cost.total - b.cost.total).abs() / a.cost.total;
    assert!(rel < 1e-6, "static {} general {}", a.cost.total, b.cost.total);
    assert!((a.cost.k - b.cost.k).abs() < 1e-6 * a.cost.k.max(1.0));
    for t in [0.0, 2.5, 10.0] {
        let (pa, pb) = (a.positions_at(t), b.positions_at(t));
        let err = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "t={t}: {err}");
    }
}

#[test]
fn final_distance_ratio_is_sech() {
    let sol = solve_static(&static_scenario(1000)).unwrap();
    let dom = sol.domain;
    let dbar = quantrack::partition::averaged_density(&bimodal().with_domain(dom).unwrap(), &sol.partition).unwrap();
    let w = |t: f64| quantrack::measures::wasserstein2(&sol.resource_at(t).unwrap(), &dbar);
    assert!((w(10.0) / w(0.0) - 1.0 / 5.0f64.cosh()).abs() < 1e-9);
}

#[test]
fn periodic_attenuation_grows_with_alpha() {
    let amp = |alpha: f64| {
        let sol = solve_periodic(&periodic_scenario(alpha, 400)).unwrap();
        sol.harmonics.iter().filter(|h| h.k == 1).map(|h| h.resource_amplitude).sum::<f64>()
    };
    let (a, b, c) = (amp(0.02), amp(0.08), amp(0.5));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn discrete_recursion_converges_to_closed_form() {
    let (alpha, horizon, r0, d) = (0.5f64, 2.0f64, 1.0, 0.0);
    let exact = alpha * (horizon / alpha).tanh() * (r0 - d) * (r0 - d);
    let sol = discrete_lq(alpha, horizon, r0, &[d; 1001]).unwrap();
    assert!((sol.cost - exact).abs() / exact < 0.01);
}

#[test]
fn scalar_solver_matches_discrete_recursion() {
    let (alpha, horizon, nt) = (0.4, 3.0, 2000);
    let params = LQParams::new(alpha, horizon, nt).unwrap();
    let d: Vec<f64> = params.grid().iter().map(|&t| (2.0 * t).sin() + 0.3 * t).collect();
    let cont = solve_scalar(&params, 0.7, &d).unwrap();
    let disc = discrete_lq(alpha, horizon, 0.7, &d).unwrap();
    assert!((cont.cost - disc.cost).abs() / cont.cost < 5e-3);
    let err = cont.r.iter().zip(&disc.r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 5e-3, "{err}");
}

#[test]
fn single_atom_matches_direct_search() {
    let dom = Domain::new(0.0, 4.0).unwrap();
    let sc = Scenario {
        resource: Density::dirac(dom, 0.5).unwrap(),
        demand: DemandSignal::Static(Density::dirac(dom, 3.0).unwrap()),
        alpha: 0.8,
        horizon: 2.0,
        grid: Grid { nx: 4, nt: 200, n_harmonics: 8 },
    };
    let sol = solve_static(&sc).unwrap();
    let inst = DiscreteInstance::from_fn(&[(0.5, 1.0)], |_| vec![(3.0, 1.0)], 0.8, 2.0, 100).unwrap();
    let cfg = DirectConfig { restarts: 4, ..DirectConfig::default() };
    let direct = direct_optimal_control(&inst, &cfg).unwrap();
    assert!((direct.cost - sol.cost.total).abs() / sol.cost.total < 0.005);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cost_breakdown_is_consistent(seed in any::<u64>(), alpha in 0.2..2.0f64, horizon in 0.5..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = Domain::new(0.0, 1.0).unwrap();
        let sc = Scenario {
            resource: random_density(&mut rng, dom),
            demand: DemandSignal::Static(random_density(&mut rng, dom)),
            alpha,
            horizon,
            grid: Grid { nx: 12, nt: 100, n_harmonics: 8 },
        };
        let sol = solve_static(&sc).unwrap();
        let c = sol.cost;
        prop_assert!((c.total - (c.assignment + alpha * alpha * c.motion)).abs() <= 1e-12 * c.total.max(1.0));
        prop_assert!(c.total >= c.k - 1e-12);
        prop_assert!(c.assignment >= c.k - 1e-12);
        prop_assert!(c.motion >= 0.0);
    }

    #[test]
    fn cells_keep_their_order(seed in any::<u64>(), alpha in 0.05..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = Scenario {
            resource: Density::from_atoms(domain10(), &random_atoms(&mut rng, 5, 0.0, 10.0)).unwrap(),
            demand: mixture_demand(),
            alpha,
            horizon: 1.0,
            grid: Grid { nx: 10, nt: 200, n_harmonics: 32 },
        };
        let sol = solve_periodic(&sc).unwrap();
        prop_assert!(sol.check_order().is_ok());
    }
}
