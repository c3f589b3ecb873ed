#![allow(dead_code)]

use quantrack::measures::{Atom, Density, Domain};
use quantrack::regimes::{DemandSignal, Grid, Scenario};
use rand::Rng;

pub const SEED: u64 = 0x5eed_2024;

pub fn domain10() -> Domain {
    Domain::new(0.0, 10.0).unwrap()
}

pub fn gaussian(x: f64, mu: f64, var: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Eleven unequal atoms evenly spaced on [0, 2].
pub fn eleven_atoms() -> Density {
    let w = [3.0, 1.0, 2.0, 5.0, 4.0, 2.0, 1.0, 3.0, 2.0, 4.0, 3.0];
    let total: f64 = w.iter().sum();
    let atoms: Vec<(f64, f64)> = w.iter().enumerate().map(|(i, &m)| (0.2 * i as f64, m / total)).collect();
    Density::from_atoms(domain10(), &atoms).unwrap()
}

pub fn bimodal() -> Density {
    Density::from_profile(domain10(), 400, |x| 0.6 * gaussian(x, 3.0, 0.36) + 0.4 * gaussian(x, 7.0, 1.0)).unwrap()
}

/// Static example: eleven atoms, bimodal demand, alpha = 2, T = 10.
pub fn static_scenario(nt: usize) -> Scenario {
    Scenario {
        resource: eleven_atoms(),
        demand: DemandSignal::Static(bimodal()),
        alpha: 2.0,
        horizon: 10.0,
        grid: Grid { nx: 200, nt, n_harmonics: 64 },
    }
}

/// Periodic Gaussian mixture with period 1.
pub fn mixture_demand() -> DemandSignal {
    DemandSignal::periodic_rule(1.0, |t| {
        let s = (2.0 * std::f64::consts::PI * t).sin();
        Density::from_profile(Domain::new(0.0, 10.0)?, 400, move |x| {
            (1.0 + s) * gaussian(x, 2.5, 1.0) + (1.0 - s) * gaussian(x, 7.5, 1.0)
        })
    })
    .unwrap()
}

pub fn periodic_scenario(alpha: f64, nt: usize) -> Scenario {
    Scenario {
        resource: eleven_atoms(),
        demand: mixture_demand(),
        alpha,
        horizon: 1.0,
        grid: Grid { nx: 200, nt, n_harmonics: 64 },
    }
}

/// Random density on `dom` with up to three atoms and up to two histogram
/// bumps (at least one piece).
pub fn random_density<R: Rng>(rng: &mut R, dom: Domain) -> Density {
    loop {
        let n_atoms = rng.gen_range(0..=3);
        let n_cells = rng.gen_range(0..=2);
        if n_atoms + n_cells == 0 {
            continue;
        }
        let mut atoms: Vec<Atom> = (0..n_atoms)
            .map(|_| Atom {
                position: rng.gen_range(dom.lo..dom.hi),
                mass: rng.gen_range(0.1..1.0),
            })
            .collect();
        let mut edges = Vec::new();
        let mut values = Vec::new();
        if n_cells > 0 {
            let mut cuts: Vec<f64> = (0..2 * n_cells).map(|_| rng.gen_range(dom.lo..dom.hi)).collect();
            cuts.sort_by(f64::total_cmp);
            for k in 0..n_cells {
                if k > 0 {
                    // gap between bumps
                    values.push(0.0);
                }
                if edges.is_empty() {
                    edges.push(cuts[0]);
                }
                let (a, b) = (cuts[2 * k], cuts[2 * k + 1]);
                if edges.last() != Some(&a) {
                    edges.push(a);
                }
                edges.push(b.max(a + 1e-3));
                values.push(rng.gen_range(0.2..1.0));
            }
        }
        let mass: f64 = atoms.iter().map(|a| a.mass).sum::<f64>()
            + edges.windows(2).zip(&values).map(|(w, v)| (w[1] - w[0]) * v).sum::<f64>();
        for a in &mut atoms {
            a.mass /= mass;
        }
        for v in &mut values {
            *v /= mass;
        }
        if let Ok(d) = Density::new(dom, atoms, edges, values) {
            return d;
        }
    }
}

/// Random atomic measure with `n` atoms in `[lo, hi]`.
pub fn random_atoms<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|m| (rng.gen_range(lo..hi), m / s)).collect()
}
