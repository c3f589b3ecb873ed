mod common;

use common::*;
use proptest::prelude::*;
use quantrack::measures::{pushforward, quantile_of, wasserstein2, Domain};
use quantrack::transport::{advect_density, evolve_quantile, from_quantile_coords, to_quantile_coords, Rule, VelocityField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn linear_field_advects_to_exact_pushforward() {
    let r = eleven_atoms();
    let v = Rule(|x: f64, _t: f64| -0.5 * (x - 1.0));
    let out = advect_density(&r, &v, 2.0, 200).unwrap();
    let decay = (-1.0f64).exp();
    let exact = pushforward(&r, |x| 1.0 + (x - 1.0) * decay).unwrap();
    assert!(wasserstein2(out.last().unwrap(), &exact) < 1e-9);
}

#[test]
fn advection_and_quantile_evolution_commute() {
    let r = bimodal();
    let c = |t: f64| -0.1 * (1.0 + t);
    let grow = |t: f64| (-0.1 * (t + 0.5 * t * t)).exp();
    let v = Rule(move |x: f64, t: f64| c(t) * (x - 5.0));
    let sim = advect_density(&r, &v, 1.0, 200).unwrap();
    let q0 = quantile_of(&r);
    let qc = q0.clone();
    let u = Rule(move |z: f64, t: f64| c(t) * (qc.eval(z) - 5.0) * grow(t));
    let ev = evolve_quantile(&q0, &u, 1.0, 200).unwrap();
    let (qs, qe) = (quantile_of(sim.last().unwrap()), ev.last().unwrap());
    for i in 1..100 {
        let z = i as f64 / 100.0;
        assert!((qs.eval(z) - qe.eval(z)).abs() < 1e-9, "z={z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_fields_keep_order(seed in any::<u64>(), a in -1.0..1.0f64, b in 0.5..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dom = Domain::new(-5.0, 5.0).unwrap();
        let r = random_density(&mut rng, Domain::new(0.0, 1.0).unwrap()).with_domain(dom).unwrap();
        let v = Rule(move |x: f64, t: f64| a * (b * x + t).sin());
        let out = advect_density(&r, &v, 1.0, 100).unwrap();
        for d in &out {
            prop_assert!(d.atoms().windows(2).all(|w| w[0].position < w[1].position));
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pulled_back_field_round_trips(seed in any::<u64>(), a in -1.0..1.0f64, b in 0.5..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_density(&mut rng, Domain::new(0.0, 1.0).unwrap());
        let v = Rule(move |x: f64, t: f64| a * (b * x).cos() + t);
        let (q, u) = to_quantile_coords(&r, &v);
        let back = from_quantile_coords(&q, &u, &r).unwrap();
        for atom in r.atoms() {
            prop_assert!((back.velocity(atom.position, 0.4) - v.velocity(atom.position, 0.4)).abs() < 1e-9);
        }
    }
}
