//! Explicit assignment plans between resource and demand densities.
//!
//! A plan couples resource locations `x` with demand locations `y`. Pieces
//! where both sides are atoms are stored as weighted pairs; pieces involving
//! a continuous part are stored as quantile intervals `[z0, z1]` on which
//! `x` and `y` are affine in `z`.

use std::fmt;

use crate::measures::{merged_breakpoints, quantile_of, Density};
use crate::quadrature::affine_sq;
use crate::tolerances;

/// Mass `mass` sent from `x` to `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub x: f64,
    pub y: f64,
    pub mass: f64,
}

/// Mass `z1 - z0`, spread uniformly in `z`, sent along the affine maps
/// `z -> x` (from `x0` to `x1`) and `z -> y` (from `y0` to `y1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalCoupling {
    pub z0: f64,
    pub z1: f64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssignmentPlan {
    pub couplings: Vec<Coupling>,
    pub intervals: Vec<IntervalCoupling>,
}

/// Northwest-corner rule: fill couplings greedily in the given orders of the
/// two atom lists `(position, mass)`. Optimal when both lists are sorted.
pub fn northwest_corner(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<Coupling> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut ra = a.first().map_or(0.0, |p| p.1);
    let mut rb = b.first().map_or(0.0, |p| p.1);
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        if m > 0.0 {
            out.push(Coupling {
                x: a[i].0,
                y: b[j].0,
                mass: m,
            });
        }
        ra -= m;
        rb -= m;
        // one side is exhausted exactly; rounding leftovers are dropped
        if ra <= 1e-14 {
            i += 1;
            ra = a.get(i).map_or(0.0, |p| p.1);
        }
        if rb <= 1e-14 {
            j += 1;
            rb = b.get(j).map_or(0.0, |p| p.1);
        }
    }
    out
}

/// Comonotone plan: mass at percentile `z` of `r` is sent to percentile `z`
/// of `d`. Its cost is `W2(r, d)^2`.
pub fn optimal_plan(r: &Density, d: &Density) -> AssignmentPlan {
    if r.is_atomic() && d.is_atomic() {
        let a: Vec<(f64, f64)> = r.atoms().iter().map(|p| (p.position, p.mass)).collect();
        let b: Vec<(f64, f64)> = d.atoms().iter().map(|p| (p.position, p.mass)).collect();
        return AssignmentPlan {
            couplings: northwest_corner(&a, &b),
            intervals: Vec::new(),
        };
    }
    let qr = quantile_of(r);
    let qd = quantile_of(d);
    let mut plan = AssignmentPlan::default();
    for w in merged_breakpoints(&qr, &qd).windows(2) {
        let piece = IntervalCoupling {
            z0: w[0],
            z1: w[1],
            x0: qr.eval_right(w[0]),
            x1: qr.eval(w[1]),
            y0: qd.eval_right(w[0]),
            y1: qd.eval(w[1]),
        };
        if piece.x0 == piece.x1 && piece.y0 == piece.y1 {
            match plan.couplings.last_mut() {
                Some(c) if c.x == piece.x0 && c.y == piece.y0 => c.mass += piece.z1 - piece.z0,
                _ => plan.couplings.push(Coupling {
                    x: piece.x0,
                    y: piece.y0,
                    mass: piece.z1 - piece.z0,
                }),
            }
        } else {
            plan.intervals.push(piece);
        }
    }
    plan
}

/// `int |y - x|^2 dK`, exact.
pub fn plan_cost(k: &AssignmentPlan) -> f64 {
    let atoms: f64 = k.couplings.iter().map(|c| c.mass * (c.y - c.x) * (c.y - c.x)).sum();
    let cont: f64 = k
        .intervals
        .iter()
        .map(|s| affine_sq(s.z0, s.z1, s.y0 - s.x0, s.y1 - s.x1))
        .sum();
    atoms + cont
}

/// Which marginal a discrepancy refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Resource,
    Demand,
}

/// A located mismatch between a plan marginal and the target density.
#[derive(Clone, Debug, PartialEq)]
pub enum Discrepancy {
    /// Atom mass at `position` differs.
    Atom {
        side: Side,
        position: f64,
        expected: f64,
        found: f64,
    },
    /// `L1` mismatch of the continuous parts over `[lo, hi]`.
    Continuous { side: Side, lo: f64, hi: f64, l1: f64 },
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discrepancy::Atom {
                side,
                position,
                expected,
                found,
            } => write!(f, "{side:?} atom at {position}: expected mass {expected}, plan carries {found}"),
            Discrepancy::Continuous { side, lo, hi, l1 } => {
                write!(f, "{side:?} continuous part on [{lo}, {hi}]: L1 mismatch {l1:e}")
            }
        }
    }
}

/// Outcome of [`check_marginals`].
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalReport {
    pub discrepancies: Vec<Discrepancy>,
    pub total_mass: f64,
}

impl MarginalReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Atom masses are compared exactly (up to rounding, `1e-12` per atom);
/// continuous parts must agree to `1e-9` in `L1`.
const ATOM_TOL: f64 = 1e-12;
const L1_TOL: f64 = 1e-9;

/// Compare both marginals of `k` with `r` and `d`.
pub fn check_marginals(k: &AssignmentPlan, r: &Density, d: &Density) -> MarginalReport {
    let mut discrepancies = Vec::new();
    let sides = [(Side::Resource, r), (Side::Demand, d)];
    for (side, target) in sides {
        let pick = |c: &Coupling| if side == Side::Resource { c.x } else { c.y };
        let ends = |s: &IntervalCoupling| {
            if side == Side::Resource {
                (s.x0, s.x1)
            } else {
                (s.y0, s.y1)
            }
        };
        // atoms of the marginal
        let mut atoms: Vec<(f64, f64)> = k.couplings.iter().map(|c| (pick(c), c.mass)).collect();
        let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
        for s in &k.intervals {
            let (lo, hi) = ends(s);
            if lo == hi {
                atoms.push((lo, s.z1 - s.z0));
            } else {
                pieces.push((lo.min(hi), lo.max(hi), (s.z1 - s.z0) / (hi - lo).abs()));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let merge = tolerances::ATOM_MERGE * target.domain().len();
        let mut grouped: Vec<(f64, f64)> = Vec::new();
        for (x, m) in atoms {
            match grouped.last_mut() {
                Some(g) if x - g.0 <= merge => g.1 += m,
                _ => grouped.push((x, m)),
            }
        }
        let expected: Vec<(f64, f64)> = target.atoms().iter().map(|a| (a.position, a.mass)).collect();
        let (mut i, mut j) = (0, 0);
        while i < grouped.len() || j < expected.len() {
            let gi = grouped.get(i).copied();
            let ej = expected.get(j).copied();
            let (position, want, have) = match (gi, ej) {
                (Some(g), Some(e)) if (g.0 - e.0).abs() <= merge => {
                    i += 1;
                    j += 1;
                    (e.0, e.1, g.1)
                }
                (Some(g), Some(e)) if g.0 < e.0 => {
                    i += 1;
                    (g.0, 0.0, g.1)
                }
                (Some(g), None) => {
                    i += 1;
                    (g.0, 0.0, g.1)
                }
                (_, Some(e)) => {
                    j += 1;
                    (e.0, e.1, 0.0)
                }
                (None, None) => unreachable!(),
            };
            if (want - have).abs() > ATOM_TOL {
                discrepancies.push(Discrepancy::Atom {
                    side,
                    position,
                    expected: want,
                    found: have,
                });
            }
        }
        // continuous parts on the union of all breakpoints
        let mut xs: Vec<f64> = target.edges().to_vec();
        for p in &pieces {
            xs.push(p.0);
            xs.push(p.1);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut worst: Option<(f64, f64)> = None;
        let mut l1 = 0.0;
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let plan_density: f64 = pieces.iter().filter(|p| p.0 <= mid && mid < p.1).map(|p| p.2).sum();
            let err = (plan_density - target.continuous_value(mid)).abs() * (w[1] - w[0]);
            if err > 0.0 && worst.is_none_or(|(_, e)| err > e) {
                worst = Some(((w[0] + w[1]) * 0.5, err));
            }
            l1 += err;
        }
        if l1 > L1_TOL {
            let (at, _) = worst.unwrap_or((0.0, 0.0));
            let (lo, hi) = xs
                .windows(2)
                .find(|w| w[0] <= at && at <= w[1])
                .map_or((at, at), |w| (w[0], w[1]));
            discrepancies.push(Discrepancy::Continuous { side, lo, hi, l1 });
        }
    }
    let total_mass = k.couplings.iter().map(|c| c.mass).sum::<f64>()
        + k.intervals.iter().map(|s| s.z1 - s.z0).sum::<f64>();
    MarginalReport {
        discrepancies,
        total_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{wasserstein2, Atom, Domain};

    fn dom() -> Domain {
        Domain::new(0.0, 10.0).unwrap()
    }

    #[test]
    fn diagonal_plan_has_zero_cost() {
        let r = Density::from_atoms(dom(), &[(1.0, 0.3), (4.0, 0.7)]).unwrap();
        let k = optimal_plan(&r, &r);
        assert_eq!(plan_cost(&k), 0.0);
        assert!(check_marginals(&k, &r, &r).passed());
    }

    #[test]
    fn single_coupling_cost() {
        let k = AssignmentPlan {
            couplings: vec![Coupling { x: 0.0, y: 3.0, mass: 1.0 }],
            intervals: vec![],
        };
        assert_eq!(plan_cost(&k), 9.0);
    }

    #[test]
    fn crossed_pairs_are_uncrossed() {
        let r = Density::from_atoms(dom(), &[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let d = Density::from_atoms(dom(), &[(5.0, 0.5), (3.0, 0.5)]).unwrap();
        let k = optimal_plan(&r, &d);
        assert_eq!(k.couplings.len(), 2);
        assert_eq!((k.couplings[0].x, k.couplings[0].y), (1.0, 3.0));
        assert_eq!((k.couplings[1].x, k.couplings[1].y), (2.0, 5.0));
        // crossed matching costs more
        let crossed = AssignmentPlan {
            couplings: vec![
                Coupling { x: 1.0, y: 5.0, mass: 0.5 },
                Coupling { x: 2.0, y: 3.0, mass: 0.5 },
            ],
            intervals: vec![],
        };
        assert!(plan_cost(&crossed) > plan_cost(&k));
        assert!(check_marginals(&crossed, &r, &d).passed());
    }

    #[test]
    fn mixed_plan_cost_equals_w2_squared() {
        let r = Density::new(
            dom(),
            vec![Atom { position: 7.0, mass: 0.25 }],
            vec![0.0, 1.0, 3.0],
            vec![0.25, 0.25],
        )
        .unwrap();
        let d = Density::from_atoms(dom(), &[(2.0, 0.4), (6.0, 0.6)]).unwrap();
        let k = optimal_plan(&r, &d);
        let w = wasserstein2(&r, &d);
        assert!((plan_cost(&k) - w * w).abs() < 1e-12);
        let rep = check_marginals(&k, &r, &d);
        assert!(rep.passed(), "{:?}", rep.discrepancies);
        assert!((rep.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_mass_is_located() {
        let r = Density::from_atoms(dom(), &[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let d = Density::from_atoms(dom(), &[(3.0, 0.5), (5.0, 0.5)]).unwrap();
        let mut k = optimal_plan(&r, &d);
        k.couplings[1].mass *= 2.0;
        let rep = check_marginals(&k, &r, &d);
        assert!(!rep.passed());
        assert!(rep.discrepancies.iter().any(|e| matches!(
            e,
            Discrepancy::Atom { side: Side::Resource, position, .. } if *position == 2.0
        )));
        assert!(rep.discrepancies.iter().any(|e| matches!(
            e,
            Discrepancy::Atom { side: Side::Demand, position, .. } if *position == 5.0
        )));
    }

    #[test]
    fn northwest_corner_on_shuffled_order_is_feasible() {
        let a = [(3.0, 0.2), (1.0, 0.5), (2.0, 0.3)];
        let b = [(0.5, 0.6), (4.0, 0.4)];
        let k = AssignmentPlan {
            couplings: northwest_corner(&a, &b),
            intervals: vec![],
        };
        let r = Density::from_atoms(dom(), &a).unwrap();
        let d = Density::from_atoms(dom(), &b).unwrap();
        assert!(check_marginals(&k, &r, &d).passed());
        let w = wasserstein2(&r, &d);
        assert!(plan_cost(&k) > w * w);
    }
}
