use crate::error::{Error, Result};
use crate::tolerances;

/// Closed spatial interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDensity(format!(
                "domain [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(Domain { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = tolerances::ATOM_MERGE * self.len();
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Smallest domain containing both.
    pub fn union(&self, other: &Domain) -> Domain {
        Domain {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// A weighted Dirac mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Normalized density on an interval: sorted Dirac atoms plus a
/// piecewise-constant histogram.
///
/// Atoms closer than `ATOM_MERGE * domain.len()` are merged, masses summed.
/// The histogram is either empty or covers `[edges[0], edges[n]]` with
/// `values[k]` the density on `[edges[k], edges[k+1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    domain: Domain,
    atoms: Vec<Atom>,
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl Density {
    /// Build and validate a density. Total mass must be one.
    pub fn new(domain: Domain, atoms: Vec<Atom>, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let d = Self::assemble(domain, atoms, edges, values)?;
        let mass = d.total_mass();
        if (mass - 1.0).abs() > tolerances::MASS {
            return Err(Error::InvalidDensity(format!(
                "total mass {mass} differs from 1 by {:e}",
                (mass - 1.0).abs()
            )));
        }
        Ok(d)
    }

    /// Build a density, rescaling all masses so that the total is one.
    pub fn normalized(domain: Domain, atoms: Vec<Atom>, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut d = Self::assemble(domain, atoms, edges, values)?;
        let mass = d.total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidDensity(format!("cannot normalize total mass {mass}")));
        }
        for a in &mut d.atoms {
            a.mass /= mass;
        }
        for v in &mut d.values {
            *v /= mass;
        }
        Ok(d)
    }

    /// Atom-only density from `(position, mass)` pairs.
    pub fn from_atoms(domain: Domain, atoms: &[(f64, f64)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|&(position, mass)| Atom { position, mass })
            .collect();
        Self::new(domain, atoms, Vec::new(), Vec::new())
    }

    /// Single unit atom.
    pub fn dirac(domain: Domain, position: f64) -> Result<Self> {
        Self::from_atoms(domain, &[(position, 1.0)])
    }

    /// Uniform density on the whole domain.
    pub fn uniform(domain: Domain) -> Self {
        Density {
            domain,
            atoms: Vec::new(),
            edges: vec![domain.lo, domain.hi],
            values: vec![1.0 / domain.len()],
        }
    }

    /// Histogram density from a nonnegative profile, sampled on `cells`
    /// uniform cells (Simpson's rule per cell) and normalized.
    pub fn from_profile(domain: Domain, cells: usize, profile: impl Fn(f64) -> f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidDensity("profile needs at least one cell".into()));
        }
        let h = domain.len() / cells as f64;
        let edges: Vec<f64> = (0..=cells).map(|k| domain.lo + h * k as f64).collect();
        let values = edges
            .windows(2)
            .map(|w| (profile(w[0]) + 4.0 * profile(0.5 * (w[0] + w[1])) + profile(w[1])) / 6.0)
            .collect();
        Self::normalized(domain, Vec::new(), edges, values)
    }

    fn assemble(domain: Domain, mut atoms: Vec<Atom>, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let domain = Domain::new(domain.lo, domain.hi)?;
        if edges.is_empty() != values.is_empty() || (!edges.is_empty() && edges.len() != values.len() + 1) {
            return Err(Error::InvalidDensity(format!(
                "{} grid edges do not match {} values",
                edges.len(),
                values.len()
            )));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidDensity("grid edges must be finite and strictly increasing".into()));
        }
        if let (Some(&first), Some(&last)) = (edges.first(), edges.last()) {
            if !domain.contains(first) || !domain.contains(last) {
                return Err(Error::InvalidDensity(format!(
                    "grid [{first}, {last}] extends outside domain [{}, {}]",
                    domain.lo, domain.hi
                )));
            }
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("density value {v} is not a nonnegative number")));
        }
        for a in &atoms {
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidDensity(format!(
                    "atom at {} has non-positive mass {}",
                    a.position, a.mass
                )));
            }
            if !a.position.is_finite() || !domain.contains(a.position) {
                return Err(Error::InvalidDensity(format!(
                    "atom at {} lies outside domain [{}, {}]",
                    a.position, domain.lo, domain.hi
                )));
            }
        }
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        let merge = tolerances::ATOM_MERGE * domain.len();
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.position - last.position <= merge => last.mass += a.mass,
                _ => merged.push(Atom {
                    position: domain.clamp(a.position),
                    mass: a.mass,
                }),
            }
        }
        let mut edges = edges;
        if let Some(first) = edges.first_mut() {
            *first = domain.clamp(*first);
        }
        if let Some(last) = edges.last_mut() {
            *last = domain.clamp(*last);
        }
        Ok(Density {
            domain,
            atoms: merged,
            edges,
            values,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_atomic(&self) -> bool {
        self.continuous_mass() == 0.0
    }

    /// Mass of each histogram cell.
    pub fn cell_masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| v * (w[1] - w[0]))
    }

    pub fn continuous_mass(&self) -> f64 {
        self.cell_masses().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.continuous_mass()
    }

    pub fn mean(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * a.position).sum();
        let cont: f64 = self
            .edges
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| v * 0.5 * (w[1] * w[1] - w[0] * w[0]))
            .sum();
        atoms + cont
    }

    /// Continuous density value at `x` (cells are half-open `[e_k, e_{k+1})`,
    /// the last one closed).
    pub fn continuous_value(&self, x: f64) -> f64 {
        let n = self.values.len();
        if n == 0 || x < self.edges[0] || x > self.edges[n] {
            return 0.0;
        }
        let k = self.edges.partition_point(|&e| e <= x).saturating_sub(1).min(n - 1);
        self.values[k]
    }

    /// Maximal intervals where the continuous part is positive.
    pub fn continuous_support(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (w, &v) in self.edges.windows(2).zip(&self.values) {
            if v <= 0.0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
        out
    }

    /// Integral of `psi` against the density: exact on atoms, five-point
    /// Gauss-Legendre on each cell.
    pub fn integrate(&self, psi: impl Fn(f64) -> f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * psi(a.position)).sum();
        let cont: f64 = self
            .edges
            .windows(2)
            .zip(&self.values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(w, &v)| {
                crate::quadrature::gauss5(w[0], w[1])
                    .iter()
                    .map(|&(x, wt)| wt * psi(x))
                    .sum::<f64>()
                    * v
            })
            .sum();
        atoms + cont
    }

    /// Same density with a wider (or equal) domain.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(domain, self.atoms.clone(), self.edges.clone(), self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(lo: f64, hi: f64) -> Domain {
        Domain::new(lo, hi).unwrap()
    }

    #[test]
    fn coincident_atoms_merge() {
        let d = Density::from_atoms(dom(0.0, 1.0), &[(0.5, 0.25), (0.2, 0.5), (0.5, 0.25)]).unwrap();
        assert_eq!(d.atoms().len(), 2);
        assert_eq!(d.atoms()[0].position, 0.2);
        assert!((d.atoms()[1].mass - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized_and_outside() {
        assert!(Density::from_atoms(dom(0.0, 1.0), &[(0.5, 0.9)]).is_err());
        assert!(Density::from_atoms(dom(0.0, 1.0), &[(1.5, 1.0)]).is_err());
        assert!(Density::from_atoms(dom(0.0, 1.0), &[(0.5, 1.5), (0.6, -0.5)]).is_err());
        assert!(Density::new(dom(0.0, 1.0), vec![], vec![0.0, 0.5, 0.4], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn normalized_rescales() {
        let d = Density::normalized(
            dom(0.0, 2.0),
            vec![Atom { position: 1.0, mass: 2.0 }],
            vec![0.0, 2.0],
            vec![1.0],
        )
        .unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-15);
        assert!((d.atoms()[0].mass - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_density_is_normalized() {
        let d = Density::from_profile(dom(0.0, 10.0), 200, |x| (-(x - 3.0) * (x - 3.0)).exp()).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-13);
        assert!((d.mean() - 3.0).abs() < 1e-3);
    }

    #[test]
    fn integrate_matches_mean() {
        let d = Density::new(
            dom(0.0, 4.0),
            vec![Atom { position: 3.0, mass: 0.5 }],
            vec![0.0, 1.0],
            vec![0.5],
        )
        .unwrap();
        assert!((d.integrate(|x| x) - d.mean()).abs() < 1e-15);
        assert!((d.mean() - (1.5 + 0.25)).abs() < 1e-15);
    }
}
