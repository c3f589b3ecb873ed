use super::Domain;
use crate::error::{Error, Result};
use crate::quadrature;
use crate::tolerances;

/// Maximal interval of percentiles on which a quantile is constant. Each one
/// corresponds to an atom of mass `z_hi - z_lo` at `level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatInterval {
    pub z_lo: f64,
    pub z_hi: f64,
    pub level: f64,
}

impl FlatInterval {
    pub fn mass(&self) -> f64 {
        self.z_hi - self.z_lo
    }
}

/// Affine piece of a quantile between consecutive knots with `z1 > z0`.
/// `q0` is the right limit at `z0`, `q1` the left limit at `z1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub z0: f64,
    pub z1: f64,
    pub q0: f64,
    pub q1: f64,
}

impl Segment {
    pub fn is_flat(&self) -> bool {
        self.q0 == self.q1
    }

    pub fn at(&self, z: f64) -> f64 {
        self.q0 + (z - self.z0) * (self.q1 - self.q0) / (self.z1 - self.z0)
    }
}

/// Left-continuous, nondecreasing map `[0, 1] -> domain`, stored as the
/// knots of a monotone polyline.
///
/// Consecutive knots with equal `z` encode a jump (a gap in the support);
/// consecutive knots with equal value encode a flat interval (an atom). The
/// first knot sits at `z = 0` and the last at `z = 1`, with no jump at either
/// end, so `Q(0)` is the right limit.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileFunction {
    domain: Domain,
    knots: Vec<(f64, f64)>,
    flats: Vec<FlatInterval>,
}

impl QuantileFunction {
    /// Validate and canonicalize a knot list.
    ///
    /// Small monotonicity violations (below `MONOTONE * domain.len()`) are
    /// snapped away; larger ones are rejected. Values closer than the atom
    /// merge tolerance are treated as equal.
    pub fn from_knots(domain: Domain, knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDensity("quantile needs at least two knots".into()));
        }
        let mono_tol = tolerances::MONOTONE * domain.len();
        let merge_tol = tolerances::ATOM_MERGE * domain.len();
        let mut ks: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
        for (i, &(z, q)) in knots.iter().enumerate() {
            if !(z.is_finite() && q.is_finite()) {
                return Err(Error::InvalidDensity(format!("non-finite quantile knot ({z}, {q})")));
            }
            let mut z = z.clamp(0.0, 1.0);
            let mut q = q;
            if let Some(&(pz, pq)) = ks.last() {
                if z < pz {
                    if pz - z > 1e-12 {
                        return Err(Error::InvalidDensity(format!(
                            "quantile knots not sorted in z at index {i}"
                        )));
                    }
                    z = pz;
                }
                if q < pq {
                    if pq - q > mono_tol {
                        return Err(Error::NonMonotone {
                            z,
                            drop: pq - q,
                            tol: mono_tol,
                        });
                    }
                    q = pq;
                } else if q - pq <= merge_tol && z > pz {
                    q = pq;
                }
            }
            if !domain.contains(q) {
                return Err(Error::InvalidDensity(format!(
                    "quantile value {q} outside domain [{}, {}]",
                    domain.lo, domain.hi
                )));
            }
            q = domain.clamp(q);
            ks.push((z, q));
        }
        if ks[0].0 > 1e-12 || ks[ks.len() - 1].0 < 1.0 - 1e-12 {
            return Err(Error::InvalidDensity(format!(
                "quantile knots span [{}, {}], expected [0, 1]",
                ks[0].0,
                ks[ks.len() - 1].0
            )));
        }
        ks[0].0 = 0.0;
        let n = ks.len();
        ks[n - 1].0 = 1.0;

        // drop jumps at the ends
        let first = ks.iter().rposition(|k| k.0 == 0.0).unwrap_or(0);
        let last = ks.iter().position(|k| k.0 == 1.0).unwrap_or(n - 1);
        if first >= last {
            return Err(Error::InvalidDensity("quantile has no extent in z".into()));
        }
        let ks = &ks[first..=last];

        // keep only the endpoints of vertical runs and of flat runs
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(ks.len());
        for &k in ks {
            if out.last() == Some(&k) {
                continue;
            }
            if out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                let vertical = a.0 == b.0 && b.0 == k.0;
                let flat = a.1 == b.1 && b.1 == k.1;
                if vertical || flat {
                    *out.last_mut().unwrap() = k;
                    continue;
                }
            }
            out.push(k);
        }
        let flats = out
            .windows(2)
            .filter(|w| w[0].1 == w[1].1 && w[1].0 > w[0].0)
            .map(|w| FlatInterval {
                z_lo: w[0].0,
                z_hi: w[1].0,
                level: w[0].1,
            })
            .collect();
        Ok(QuantileFunction {
            domain,
            knots: out,
            flats,
        })
    }

    /// `Q(z) = z` scaled onto the domain of a uniform density.
    pub fn identity(domain: Domain) -> Self {
        QuantileFunction {
            domain,
            knots: vec![(0.0, domain.lo), (1.0, domain.hi)],
            flats: Vec::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn flats(&self) -> &[FlatInterval] {
        &self.flats
    }

    /// Breakpoints in `z` (with duplicates removed).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut zs: Vec<f64> = self.knots.iter().map(|k| k.0).collect();
        zs.dedup();
        zs
    }

    /// `Q(z)`, left-continuous; `Q(0)` is the right limit at zero.
    pub fn eval(&self, z: f64) -> f64 {
        let k = &self.knots;
        if z <= k[0].0 {
            return k[0].1;
        }
        let j = k.partition_point(|p| p.0 < z);
        if j == k.len() {
            return k[j - 1].1;
        }
        let (z0, q0) = k[j - 1];
        let (z1, q1) = k[j];
        q0 + (z - z0) * (q1 - q0) / (z1 - z0)
    }

    /// `Q(z+)`, the right limit.
    pub fn eval_right(&self, z: f64) -> f64 {
        let k = &self.knots;
        let j = k.partition_point(|p| p.0 <= z);
        if j == 0 {
            return k[0].1;
        }
        if j == k.len() {
            return k[j - 1].1;
        }
        let (z0, q0) = k[j - 1];
        let (z1, q1) = k[j];
        q0 + (z - z0) * (q1 - q0) / (z1 - z0)
    }

    /// Affine pieces in increasing `z`.
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.knots
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| Segment {
                z0: w[0].0,
                z1: w[1].0,
                q0: w[0].1,
                q1: w[1].1,
            })
    }

    /// Flat interval containing `z` under the `(z_lo, z_hi]` convention.
    pub fn flat_containing(&self, z: f64) -> Option<&FlatInterval> {
        let i = self.flats.partition_point(|f| f.z_hi < z);
        self.flats
            .get(i)
            .filter(|f| (z > f.z_lo || (z == 0.0 && f.z_lo == 0.0)) && z <= f.z_hi)
    }

    /// Exact integral of `Q` over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut zs = vec![a];
        zs.extend(self.breakpoints().into_iter().filter(|&z| z > a && z < b));
        zs.push(b);
        zs.windows(2)
            .map(|w| quadrature::affine(w[0], w[1], self.eval_right(w[0]), self.eval(w[1])))
            .sum()
    }

    /// Mean of the underlying density.
    pub fn mean(&self) -> f64 {
        self.integral(0.0, 1.0)
    }

    /// Pointwise `(1 - lambda) * a + lambda * b`: displacement interpolation
    /// between the two densities.
    pub fn lerp(a: &Self, b: &Self, lambda: f64) -> Result<Self> {
        Self::combine(a, b, |x, y| (1.0 - lambda) * x + lambda * y)
    }

    /// Pointwise combination over the merged breakpoints. `f` must map
    /// pairs of nondecreasing inputs to nondecreasing outputs.
    pub fn combine(a: &Self, b: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let zs = merged_breakpoints(a, b);
        let mut knots = Vec::with_capacity(2 * zs.len());
        for w in zs.windows(2) {
            knots.push((w[0], f(a.eval_right(w[0]), b.eval_right(w[0]))));
            knots.push((w[1], f(a.eval(w[1]), b.eval(w[1]))));
        }
        Self::from_knots(a.domain.union(&b.domain), knots)
    }

    /// Same knots on a (wider) domain.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::from_knots(domain, self.knots.clone())
    }
}

/// Sorted union of the breakpoints of two quantiles.
pub(crate) fn merged_breakpoints(a: &QuantileFunction, b: &QuantileFunction) -> Vec<f64> {
    let mut zs = a.breakpoints();
    zs.extend(b.breakpoints());
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    zs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(0.0, 10.0).unwrap()
    }

    #[test]
    fn left_and_right_limits_at_jump() {
        // two atoms of mass 1/2 at 0 and 4
        let q = QuantileFunction::from_knots(dom(), vec![(0.0, 0.0), (0.5, 0.0), (0.5, 4.0), (1.0, 4.0)])
            .unwrap();
        assert_eq!(q.eval(0.0), 0.0);
        assert_eq!(q.eval(0.5), 0.0);
        assert_eq!(q.eval_right(0.5), 4.0);
        assert_eq!(q.eval(0.50001), 4.0);
        assert_eq!(q.flats().len(), 2);
        assert_eq!(q.flat_containing(0.5).unwrap().level, 0.0);
        assert_eq!(q.flat_containing(0.75).unwrap().level, 4.0);
        assert_eq!(q.flat_containing(0.0).unwrap().level, 0.0);
    }

    #[test]
    fn end_jumps_are_stripped() {
        let q = QuantileFunction::from_knots(dom(), vec![(0.0, 0.0), (0.0, 2.0), (1.0, 3.0), (1.0, 9.0)])
            .unwrap();
        assert_eq!(q.knots(), &[(0.0, 2.0), (1.0, 3.0)]);
    }

    #[test]
    fn rejects_decreasing() {
        let r = QuantileFunction::from_knots(dom(), vec![(0.0, 3.0), (1.0, 2.0)]);
        assert!(matches!(r, Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn flat_runs_collapse() {
        let q = QuantileFunction::from_knots(
            dom(),
            vec![(0.0, 1.0), (0.2, 1.0), (0.4, 1.0), (1.0, 2.0)],
        )
        .unwrap();
        assert_eq!(q.flats().len(), 1);
        assert_eq!(q.flats()[0].z_hi, 0.4);
    }

    #[test]
    fn integral_is_exact() {
        let q = QuantileFunction::identity(Domain::new(0.0, 1.0).unwrap());
        assert!((q.integral(0.0, 0.5) - 0.125).abs() < 1e-15);
        assert!((q.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lerp_moves_atoms_linearly() {
        let a = QuantileFunction::from_knots(dom(), vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let b = QuantileFunction::from_knots(dom(), vec![(0.0, 5.0), (1.0, 5.0)]).unwrap();
        let m = QuantileFunction::lerp(&a, &b, 0.25).unwrap();
        assert_eq!(m.eval(0.3), 2.0);
        assert_eq!(m.flats().len(), 1);
    }
}
