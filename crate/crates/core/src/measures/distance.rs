use super::{cdf_of, merged_breakpoints, CdfFunction, Density, QuantileFunction};
use crate::quadrature::affine_sq;

/// 2-Wasserstein distance `W2(a, b)` (not squared).
///
/// Sweeps the two CDF polylines jointly in the mass coordinate: on each
/// interval between consecutive knot heights both inverse CDFs are affine,
/// so the squared difference is integrated exactly.
pub fn wasserstein2(a: &Density, b: &Density) -> f64 {
    let fa = cdf_of(a);
    let fb = cdf_of(b);
    let mut zs: Vec<f64> = fa.knots().iter().chain(fb.knots()).map(|k| k.1).collect();
    zs.push(0.0);
    zs.push(1.0);
    zs.sort_by(f64::total_cmp);
    zs.dedup();

    let mut ia = InverseCursor::new(&fa);
    let mut ib = InverseCursor::new(&fb);
    let mut total = 0.0;
    for w in zs.windows(2) {
        let (a0, a1) = ia.affine_on(w[0], w[1]);
        let (b0, b1) = ib.affine_on(w[0], w[1]);
        total += affine_sq(w[0], w[1], b0 - a0, b1 - a1);
    }
    total.max(0.0).sqrt()
}

/// `||qa - qb||` in `L2([0, 1])`.
pub fn l2_quantile_distance(qa: &QuantileFunction, qb: &QuantileFunction) -> f64 {
    let zs = merged_breakpoints(qa, qb);
    zs.windows(2)
        .map(|w| {
            let g0 = qb.eval_right(w[0]) - qa.eval_right(w[0]);
            let g1 = qb.eval(w[1]) - qa.eval(w[1]);
            affine_sq(w[0], w[1], g0, g1)
        })
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Walks the knots of a CDF in increasing height and returns the inverse on
/// mass intervals that contain no knot height in their interior.
struct InverseCursor<'a> {
    knots: &'a [(f64, f64)],
    k: usize,
}

impl<'a> InverseCursor<'a> {
    fn new(f: &'a CdfFunction) -> Self {
        InverseCursor { knots: f.knots(), k: 0 }
    }

    fn affine_on(&mut self, z0: f64, z1: f64) -> (f64, f64) {
        let ks = self.knots;
        // first rising segment whose top reaches z1
        while self.k + 1 < ks.len() && (ks[self.k + 1].1 < z1 || ks[self.k + 1].1 <= ks[self.k].1) {
            self.k += 1;
        }
        if self.k + 1 >= ks.len() {
            let x = ks[ks.len() - 1].0;
            return (x, x);
        }
        let (x0, f0) = ks[self.k];
        let (x1, f1) = ks[self.k + 1];
        let at = |z: f64| x0 + (z - f0) * (x1 - x0) / (f1 - f0);
        (at(z0), at(z1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{quantile_of, Domain};

    fn dom() -> Domain {
        Domain::new(0.0, 10.0).unwrap()
    }

    #[test]
    fn unit_atoms() {
        let a = Density::dirac(dom(), 2.0).unwrap();
        let b = Density::dirac(dom(), 7.5).unwrap();
        assert!((wasserstein2(&a, &b) - 5.5).abs() < 1e-14);
        assert_eq!(wasserstein2(&a, &a), 0.0);
    }

    #[test]
    fn offset_quantiles() {
        let qa = QuantileFunction::from_knots(dom(), vec![(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let qb = QuantileFunction::from_knots(dom(), vec![(0.0, 1.25), (1.0, 2.25)]).unwrap();
        assert!((l2_quantile_distance(&qa, &qb) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn uniform_vs_atom() {
        // W2^2(U[0,1], delta_0.5) = 1/12
        let a = Density::uniform(Domain::new(0.0, 1.0).unwrap());
        let b = Density::dirac(Domain::new(0.0, 1.0).unwrap(), 0.5).unwrap();
        let w = wasserstein2(&a, &b);
        assert!((w * w - 1.0 / 12.0).abs() < 1e-15);
        let l = l2_quantile_distance(&quantile_of(&a), &quantile_of(&b));
        assert!((w - l).abs() < 1e-15);
    }

    #[test]
    fn mixed_with_gaps() {
        let a = Density::new(
            dom(),
            vec![crate::measures::Atom { position: 6.0, mass: 0.4 }],
            vec![0.0, 1.0, 3.0],
            vec![0.2, 0.2],
        )
        .unwrap();
        let b = Density::from_atoms(dom(), &[(1.0, 0.3), (9.0, 0.7)]).unwrap();
        let w = wasserstein2(&a, &b);
        let l = l2_quantile_distance(&quantile_of(&a), &quantile_of(&b));
        assert!((w - l).abs() < 1e-12, "{w} vs {l}");
    }
}
