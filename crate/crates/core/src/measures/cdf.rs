use super::Domain;

/// Right-continuous CDF on a domain, stored as the knots of a monotone
/// polyline. A jump at `x` appears as two consecutive knots `(x, F(x-))`,
/// `(x, F(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfFunction {
    domain: Domain,
    knots: Vec<(f64, f64)>,
}

impl CdfFunction {
    /// `knots` must be nondecreasing in both coordinates; the first value is
    /// taken as `F(lo-) = 0` side and the last must be 1.
    pub(crate) fn from_sorted_knots(domain: Domain, mut knots: Vec<(f64, f64)>) -> Self {
        knots.dedup();
        CdfFunction { domain, knots }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// `F(x)`, right-continuous.
    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x < k[0].0 {
            return 0.0;
        }
        let j = k.partition_point(|p| p.0 <= x);
        if j == k.len() {
            return k[j - 1].1;
        }
        let (x0, f0) = k[j - 1];
        let (x1, f1) = k[j];
        f0 + (x - x0) * (f1 - f0) / (x1 - x0)
    }

    /// `F(x-)`, the left limit.
    pub fn eval_left(&self, x: f64) -> f64 {
        let k = &self.knots;
        let j = k.partition_point(|p| p.0 < x);
        if j == 0 {
            return 0.0;
        }
        if j == k.len() {
            return k[j - 1].1;
        }
        let (x0, f0) = k[j - 1];
        let (x1, f1) = k[j];
        f0 + (x - x0) * (f1 - f0) / (x1 - x0)
    }

    /// Size of the jump at `x`.
    pub fn jump(&self, x: f64) -> f64 {
        self.eval(x) - self.eval_left(x)
    }
}
