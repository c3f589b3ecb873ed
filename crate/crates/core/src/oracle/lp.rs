//! Brute-force transport between small atomic measures.

use crate::error::{Error, Result};

/// Atoms as `(position, mass)`.
pub type Atoms = [(f64, f64)];

pub const MAX_ATOMS: usize = 8;

fn check(a: &Atoms, b: &Atoms) -> Result<()> {
    for (name, s) in [("resource", a), ("demand", b)] {
        if s.is_empty() || s.len() > MAX_ATOMS {
            return Err(Error::InstanceTooLarge(format!(
                "{name} has {} atoms; brute force handles 1..={MAX_ATOMS}",
                s.len()
            )));
        }
        if s.iter().any(|p| !(p.0.is_finite() && p.1 >= 0.0)) {
            return Err(Error::InvalidDensity(format!("{name} atoms must be finite with nonnegative mass")));
        }
    }
    let (ma, mb): (f64, f64) = (a.iter().map(|p| p.1).sum(), b.iter().map(|p| p.1).sum());
    if (ma - mb).abs() > 1e-9 * ma.max(mb) {
        return Err(Error::InvalidDensity(format!("masses differ: {ma} vs {mb}")));
    }
    Ok(())
}

/// Heap's algorithm over `0..n`, calling `f` on every permutation.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Minimum over bijections for two uniform measures with `n` atoms each.
pub fn permutation_wasserstein(a: &Atoms, b: &Atoms) -> Result<f64> {
    check(a, b)?;
    if a.len() != b.len() {
        return Err(Error::InvalidDensity("permutation matching needs equal atom counts".into()));
    }
    let n = a.len();
    let w = a.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let mut best = f64::INFINITY;
    for_each_permutation(n, |p| {
        let c: f64 = p.iter().enumerate().map(|(i, &j)| (a[i].0 - b[j].0).powi(2)).sum();
        best = best.min(c);
    });
    Ok(best * w)
}

/// Northwest-corner plan of `a` and `b` in the given orders; returns its cost.
fn northwest_cost(a: &Atoms, oa: &[usize], b: &Atoms) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[oa[0]].1, b[0].1);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        cost += m * (a[oa[i]].0 - b[j].0).powi(2);
        ra -= m;
        rb -= m;
        if ra <= rb {
            i += 1;
            if i < a.len() {
                ra = a[oa[i]].1;
            }
        } else {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    cost
}

/// Minimum of the northwest-corner cost over every ordering of `a`, with
/// `b` sorted by position.
pub fn northwest_wasserstein(a: &Atoms, b: &Atoms) -> Result<f64> {
    check(a, b)?;
    let mut bs = b.to_vec();
    bs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = f64::INFINITY;
    for_each_permutation(a.len(), |p| best = best.min(northwest_cost(a, p, &bs)));
    Ok(best)
}

/// Squared 2-Wasserstein distance between atomic measures (at most
/// `MAX_ATOMS` atoms each): permutation enumeration when both are uniform
/// with equal counts, exhaustive northwest corner otherwise.
pub fn lp_wasserstein(a: &Atoms, b: &Atoms) -> Result<f64> {
    check(a, b)?;
    let uniform = |s: &Atoms| s.iter().all(|p| (p.1 - s[0].1).abs() <= 1e-15);
    if a.len() == b.len() && uniform(a) && uniform(b) {
        permutation_wasserstein(a, b)
    } else {
        northwest_wasserstein(a, b)
    }
}

/// Dense simplex tableau for `min c x` subject to `A x = rhs`, `x >= 0`.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

const PIVOT_EPS: f64 = 1e-12;

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        let (pr, prhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            if i != r {
                let f = self.rows[i][c];
                if f != 0.0 {
                    for (v, &q) in self.rows[i].iter_mut().zip(&pr) {
                        *v -= f * q;
                    }
                    self.rhs[i] -= f * prhs;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule until no allowed column has negative reduced cost.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) {
        loop {
            let nv = cost.len();
            let entering = (0..nv).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let red = cost[j]
                        - self
                            .rows
                            .iter()
                            .zip(&self.basis)
                            .map(|(row, &b)| cost[b] * row[j])
                            .sum::<f64>();
                    red < -PIVOT_EPS
                }
            });
            let Some(j) = entering else { return };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j] > PIVOT_EPS {
                    let ratio = self.rhs[i] / row[j];
                    let better = match leave {
                        None => true,
                        Some((k, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, j),
                // bounded by construction: transport plans are bounded
                None => return,
            }
        }
    }
}

/// Squared 2-Wasserstein distance by a two-phase simplex solve of the
/// transportation linear program.
pub fn simplex_wasserstein(a: &Atoms, b: &Atoms) -> Result<f64> {
    check(a, b)?;
    let (m, n) = (a.len(), b.len());
    let scale = a.iter().map(|p| p.1).sum::<f64>() / b.iter().map(|p| p.1).sum::<f64>();
    let nx = m * n;
    // row sums for every i, column sums for all but the last j
    let k = m + n - 1;
    let nv = nx + k;
    let mut rows = vec![vec![0.0; nv]; k];
    let mut rhs = vec![0.0; k];
    for i in 0..m {
        for j in 0..n {
            rows[i][i * n + j] = 1.0;
        }
        rhs[i] = a[i].1;
    }
    for j in 0..n - 1 {
        for i in 0..m {
            rows[m + j][i * n + j] = 1.0;
        }
        rhs[m + j] = b[j].1 * scale;
    }
    for (r, row) in rows.iter_mut().enumerate() {
        row[nx + r] = 1.0;
    }
    let mut tab = Tableau {
        rows,
        rhs,
        basis: (nx..nv).collect(),
    };
    let phase1: Vec<f64> = (0..nv).map(|j| if j < nx { 0.0 } else { 1.0 }).collect();
    tab.optimize(&phase1, &vec![true; nv]);
    // drive zero-level artificials out of the basis
    for r in 0..k {
        if tab.basis[r] >= nx {
            if let Some(c) = (0..nx).find(|&c| tab.rows[r][c].abs() > PIVOT_EPS && !tab.basis.contains(&c)) {
                tab.pivot(r, c);
            }
        }
    }
    let cost: Vec<f64> = (0..nv)
        .map(|v| if v < nx { (a[v / n].0 - b[v % n].0).powi(2) } else { 0.0 })
        .collect();
    let allowed: Vec<bool> = (0..nv).map(|v| v < nx).collect();
    tab.optimize(&cost, &allowed);
    Ok(tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&v, _)| v < nx)
        .map(|(&v, &x)| cost[v] * x)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_cost_nothing() {
        let a = [(0.1, 0.25), (0.4, 0.25), (0.9, 0.5)];
        assert_eq!(lp_wasserstein(&a, &a).unwrap(), 0.0);
        assert!(simplex_wasserstein(&a, &a).unwrap().abs() < 1e-15);
    }

    #[test]
    fn diracs() {
        let v = lp_wasserstein(&[(1.0, 1.0)], &[(3.5, 1.0)]).unwrap();
        assert_eq!(v, 6.25);
    }

    #[test]
    fn methods_agree_on_unequal_masses() {
        let a = [(0.9, 0.3), (0.1, 0.2), (0.5, 0.5)];
        let b = [(0.2, 0.6), (0.7, 0.15), (1.0, 0.25)];
        let nw = northwest_wasserstein(&a, &b).unwrap();
        let sx = simplex_wasserstein(&a, &b).unwrap();
        assert!((nw - sx).abs() < 1e-12, "{nw} vs {sx}");
    }

    #[test]
    fn uniform_methods_agree() {
        let a = [(0.3, 0.25), (0.0, 0.25), (0.8, 0.25), (0.5, 0.25)];
        let b = [(0.1, 0.25), (0.9, 0.25), (0.2, 0.25), (0.4, 0.25)];
        let p = permutation_wasserstein(&a, &b).unwrap();
        assert!((p - northwest_wasserstein(&a, &b).unwrap()).abs() < 1e-14);
        assert!((p - simplex_wasserstein(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn too_many_atoms_rejected() {
        let a: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0 / 9.0)).collect();
        assert!(matches!(lp_wasserstein(&a, &a), Err(Error::InstanceTooLarge(_))));
    }
}
