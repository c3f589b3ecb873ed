use super::{Atom, CdfFunction, Density, Domain, QuantileFunction};
use crate::error::{Error, Result};
use crate::tolerances;

/// CDF of a density: linear across histogram cells, jumping by the atom
/// mass at each atom.
pub fn cdf_of(d: &Density) -> CdfFunction {
    let dom = d.domain();
    let edges = d.edges();
    let values = d.values();
    let atoms = d.atoms();

    let mut xs: Vec<f64> = Vec::with_capacity(edges.len() + atoms.len() + 2);
    xs.push(dom.lo);
    xs.extend_from_slice(edges);
    xs.extend(atoms.iter().map(|a| a.position));
    xs.push(dom.hi);
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    // cumulative continuous mass at each edge
    let mut cum = Vec::with_capacity(edges.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for (w, v) in edges.windows(2).zip(values) {
        acc += v * (w[1] - w[0]);
        cum.push(acc);
    }
    let continuous = |x: f64| -> f64 {
        if edges.is_empty() || x <= edges[0] {
            return 0.0;
        }
        let n = values.len();
        if x >= edges[n] {
            return cum[n];
        }
        let k = edges.partition_point(|&e| e <= x) - 1;
        cum[k] + values[k] * (x - edges[k])
    };

    let mut knots = Vec::with_capacity(2 * xs.len());
    let mut atom_mass = 0.0;
    let mut ai = 0;
    for &x in &xs {
        let left = continuous(x) + atom_mass;
        knots.push((x, left));
        let mut jump = 0.0;
        while ai < atoms.len() && atoms[ai].position <= x {
            jump += atoms[ai].mass;
            ai += 1;
        }
        if jump > 0.0 {
            atom_mass += jump;
            knots.push((x, left + jump));
        }
    }
    let total = knots.last().map(|k| k.1).unwrap_or(1.0);
    for k in &mut knots {
        k.1 = (k.1 / total).min(1.0);
    }
    // running max guards against rounding wiggles
    for i in 1..knots.len() {
        if knots[i].1 < knots[i - 1].1 {
            knots[i].1 = knots[i - 1].1;
        }
    }
    CdfFunction::from_sorted_knots(dom, knots)
}

/// Generalized inverse `Q(z) = inf { x : F(x) >= z }` of the density's CDF.
pub fn quantile_of(d: &Density) -> QuantileFunction {
    let f = cdf_of(d);
    let knots = f.knots().iter().map(|&(x, z)| (z, x)).collect();
    QuantileFunction::from_knots(d.domain(), knots)
        .expect("quantile of a valid density is well formed")
}

/// `F(x) = sup { z : Q(z) <= x }`.
pub fn cdf_from_quantile(q: &QuantileFunction) -> CdfFunction {
    let dom = q.domain();
    let ks = q.knots();
    let mut knots = Vec::with_capacity(ks.len() + 2);
    if ks[0].1 > dom.lo {
        knots.push((dom.lo, 0.0));
    }
    knots.extend(ks.iter().map(|&(z, x)| (x, z)));
    if ks[ks.len() - 1].1 < dom.hi {
        knots.push((dom.hi, 1.0));
    }
    CdfFunction::from_sorted_knots(dom, knots)
}

/// Pushforward of the uniform density on `[0, 1]` through `q`: flats become
/// atoms, increasing pieces become histogram cells with density `1 / Q'`.
pub fn density_from_quantile(q: &QuantileFunction) -> Result<Density> {
    let mut atoms = Vec::new();
    let mut edges: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for s in q.segments() {
        if s.is_flat() {
            atoms.push(Atom {
                position: s.q0,
                mass: s.z1 - s.z0,
            });
            continue;
        }
        match edges.last() {
            None => edges.push(s.q0),
            Some(&e) if e < s.q0 => {
                edges.push(s.q0);
                values.push(0.0);
            }
            _ => {}
        }
        edges.push(s.q1);
        values.push((s.z1 - s.z0) / (s.q1 - s.q0));
    }
    Density::normalized(q.domain(), atoms, edges, values)
}

/// Pushforward `f # d` of a density through a monotone nondecreasing map.
///
/// Equivalent to [`pushforward_with`] with 64 subdivisions per quantile
/// piece.
pub fn pushforward(d: &Density, f: impl Fn(f64) -> f64) -> Result<Density> {
    pushforward_with(d, f, 64)
}

/// Pushforward through `f`, using that `Q_{f#d} = f o Q_d`. Atoms map
/// exactly; on each increasing piece of `Q_d`, `f` is sampled at
/// `subdivisions` equal steps in `z` and interpolated linearly.
///
/// The output domain is the input domain widened to contain `f`'s range.
pub fn pushforward_with(d: &Density, f: impl Fn(f64) -> f64, subdivisions: usize) -> Result<Density> {
    let subdivisions = subdivisions.max(1);
    let q = quantile_of(d);
    let ks = q.knots();
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(ks.len() * subdivisions);
    let mut probe = |z: f64, x: f64| -> Result<()> {
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::InvalidDensity(format!("map is not finite at x={x}")));
        }
        out.push((z, y));
        Ok(())
    };
    for (i, &(z, x)) in ks.iter().enumerate() {
        probe(z, x)?;
        if let Some(&(z1, x1)) = ks.get(i + 1) {
            if z1 > z && x1 > x {
                for s in 1..subdivisions {
                    let lam = s as f64 / subdivisions as f64;
                    probe(z + lam * (z1 - z), x + lam * (x1 - x))?;
                }
            }
        }
    }
    let scale = d.domain().len();
    let mut lo = d.domain().lo;
    let mut hi = d.domain().hi;
    for (w, k) in out.windows(2).zip(1..) {
        if w[1].1 < w[0].1 - tolerances::MONOTONE * scale {
            return Err(Error::NonMonotoneMap { x: q.eval(out[k].0) });
        }
    }
    for &(_, y) in &out {
        lo = lo.min(y);
        hi = hi.max(y);
    }
    let qf = QuantileFunction::from_knots(Domain::new(lo, hi)?, out)?;
    density_from_quantile(&qf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(lo: f64, hi: f64) -> Domain {
        Domain::new(lo, hi).unwrap()
    }

    #[test]
    fn unit_atom_cdf_is_step() {
        let d = Density::dirac(dom(0.0, 10.0), 3.0).unwrap();
        let f = cdf_of(&d);
        assert_eq!(f.eval(2.999), 0.0);
        assert_eq!(f.eval(3.0), 1.0);
        assert_eq!(f.eval_left(3.0), 0.0);
        assert_eq!(f.jump(3.0), 1.0);
    }

    #[test]
    fn uniform_cdf_and_quantile_are_identity() {
        let d = Density::uniform(dom(0.0, 1.0));
        let f = cdf_of(&d);
        let q = quantile_of(&d);
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((f.eval(x) - x).abs() < 1e-15);
            assert!((q.eval(x) - x).abs() < 1e-15);
        }
        assert!(q.flats().is_empty());
    }

    #[test]
    fn two_half_atoms() {
        let d = Density::from_atoms(dom(0.0, 10.0), &[(0.0, 0.5), (4.0, 0.5)]).unwrap();
        let q = quantile_of(&d);
        assert_eq!(q.eval(0.0), 0.0);
        assert_eq!(q.eval(0.25), 0.0);
        assert_eq!(q.eval(0.5), 0.0);
        assert_eq!(q.eval(0.5 + 1e-12), 4.0);
        assert_eq!(q.eval(1.0), 4.0);
        assert_eq!(q.flats().len(), 2);
    }

    #[test]
    fn staircase_quantile_to_cdf() {
        let q = QuantileFunction::from_knots(
            dom(0.0, 3.0),
            vec![(0.0, 1.0), (0.3, 1.0), (0.3, 2.0), (1.0, 2.0)],
        )
        .unwrap();
        let f = cdf_from_quantile(&q);
        assert!((f.jump(1.0) - 0.3).abs() < 1e-15);
        assert!((f.jump(2.0) - 0.7).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 0.0);
        assert!((f.eval(1.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn density_from_scaled_identity() {
        let q = QuantileFunction::from_knots(dom(0.0, 2.0), vec![(0.0, 0.0), (1.0, 2.0)]).unwrap();
        let d = density_from_quantile(&q).unwrap();
        assert!(d.atoms().is_empty());
        assert_eq!(d.values(), &[0.5]);
        let flat = QuantileFunction::from_knots(dom(0.0, 10.0), vec![(0.0, 5.0), (1.0, 5.0)]).unwrap();
        let d = density_from_quantile(&flat).unwrap();
        assert_eq!(d.atoms().len(), 1);
        assert_eq!(d.atoms()[0].position, 5.0);
    }

    #[test]
    fn gap_in_support_round_trips() {
        let d = Density::new(
            dom(0.0, 10.0),
            vec![Atom { position: 5.0, mass: 0.2 }],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.5, 0.0, 0.3],
        )
        .unwrap();
        let back = density_from_quantile(&quantile_of(&d)).unwrap();
        assert_eq!(back.atoms().len(), 1);
        assert_eq!(back.atoms()[0].position, 5.0);
        assert!((back.atoms()[0].mass - 0.2).abs() < 1e-15);
        for x in [1.5, 2.5, 3.5, 4.5] {
            assert!((back.continuous_value(x) - d.continuous_value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn pushforward_translates_atoms() {
        let d = Density::dirac(dom(0.0, 10.0), 0.0).unwrap();
        let p = pushforward(&d, |x| x + 3.0).unwrap();
        assert_eq!(p.atoms()[0].position, 3.0);
        let id = pushforward(&Density::uniform(dom(0.0, 1.0)), |x| x).unwrap();
        assert!((id.continuous_value(0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pushforward_rejects_decreasing_map() {
        let d = Density::uniform(dom(0.0, 1.0));
        assert!(matches!(pushforward(&d, |x| -x), Err(Error::NonMonotoneMap { .. })));
    }

    #[test]
    fn pushforward_square_satisfies_test_function_identity() {
        let d = Density::uniform(dom(0.0, 1.0));
        let p = pushforward_with(&d, |x| x * x, 400).unwrap();
        for k in 1..5 {
            let c = k as f64 / 5.0;
            let psi = |y: f64| (y - c).max(0.0);
            // int_0^1 max(x^2 - c, 0) dx
            let s = c.sqrt();
            let exact = (1.0 - s * s * s) / 3.0 - c * (1.0 - s);
            assert!((p.integrate(psi) - exact).abs() < 1e-5, "c={c}");
        }
    }
}
