use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measures::{density_from_quantile, quantile_of, wasserstein2, Density, Domain, QuantileFunction};
use crate::tolerances;

/// Demand as a function of the phase `t` in `[0, period)`.
pub type DemandRule = Arc<dyn Fn(f64) -> Result<Density> + Send + Sync>;

/// One period of a periodic demand.
#[derive(Clone)]
pub enum PeriodicProfile {
    /// Closed-form rule, evaluated at `t mod period`.
    Rule(DemandRule),
    /// Equally spaced slices over one period (the first at phase 0),
    /// interpolated by displacement interpolation with wrap-around.
    Table(Vec<Density>),
}

/// Exogenous demand over time.
#[derive(Clone)]
pub enum DemandSignal {
    Static(Density),
    Periodic { period: f64, profile: PeriodicProfile },
    /// Slices at increasing times; between them the quantiles are
    /// interpolated linearly (displacement interpolation).
    Sampled { times: Vec<f64>, slices: Vec<Density> },
}

impl fmt::Debug for DemandSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandSignal::Static(d) => f.debug_tuple("Static").field(d).finish(),
            DemandSignal::Periodic { period, profile } => {
                let kind = match profile {
                    PeriodicProfile::Rule(_) => "rule".to_string(),
                    PeriodicProfile::Table(t) => format!("table of {}", t.len()),
                };
                f.debug_struct("Periodic").field("period", period).field("profile", &kind).finish()
            }
            DemandSignal::Sampled { times, slices } => f
                .debug_struct("Sampled")
                .field("times", times)
                .field("slices", &slices.len())
                .finish(),
        }
    }
}

impl DemandSignal {
    /// Periodic demand from a closed-form rule.
    pub fn periodic_rule(period: f64, rule: impl Fn(f64) -> Result<Density> + Send + Sync + 'static) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(crate::error::invalid_param("period", format!("must be positive, got {period}")));
        }
        Ok(DemandSignal::Periodic {
            period,
            profile: PeriodicProfile::Rule(Arc::new(rule)),
        })
    }

    /// Sampled demand; times must be strictly increasing.
    pub fn sampled(times: Vec<f64>, slices: Vec<Density>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::GridMismatch(format!(
                "{} sample times for {} demand slices",
                times.len(),
                slices.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("demand sample times must increase".into()));
        }
        Ok(DemandSignal::Sampled { times, slices })
    }

    pub fn is_static(&self) -> bool {
        matches!(self, DemandSignal::Static(_))
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            DemandSignal::Periodic { period, .. } => Some(*period),
            _ => None,
        }
    }

    /// Domain of the slice at `t = 0` (or of the first slice).
    pub fn domain(&self) -> Result<Domain> {
        Ok(match self {
            DemandSignal::Static(d) => d.domain(),
            DemandSignal::Periodic { profile, .. } => match profile {
                PeriodicProfile::Rule(f) => f(0.0)?.domain(),
                PeriodicProfile::Table(t) => t
                    .iter()
                    .map(Density::domain)
                    .reduce(|a, b| a.union(&b))
                    .ok_or_else(|| Error::InvalidDensity("empty periodic table".into()))?,
            },
            DemandSignal::Sampled { slices, .. } => slices
                .iter()
                .map(Density::domain)
                .reduce(|a, b| a.union(&b))
                .ok_or_else(|| Error::InvalidDensity("empty sampled demand".into()))?,
        })
    }

    /// Check that the demand is defined on all of `[0, horizon]`.
    pub fn check_coverage(&self, horizon: f64) -> Result<()> {
        match self {
            DemandSignal::Sampled { times, .. } => {
                let eps = 1e-12 * horizon.max(1.0);
                if times[0] > eps || times[times.len() - 1] < horizon - eps {
                    return Err(Error::DemandCoverage {
                        horizon,
                        reason: format!("samples span [{}, {}]", times[0], times[times.len() - 1]),
                    });
                }
                Ok(())
            }
            DemandSignal::Periodic {
                profile: PeriodicProfile::Table(t),
                ..
            } if t.is_empty() => Err(Error::DemandCoverage {
                horizon,
                reason: "periodic table is empty".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Demand quantile at time `t`.
    pub fn quantile_at(&self, t: f64) -> Result<QuantileFunction> {
        match self {
            DemandSignal::Static(d) => Ok(quantile_of(d)),
            DemandSignal::Periodic { period, profile } => {
                let phase = t.rem_euclid(*period);
                match profile {
                    PeriodicProfile::Rule(f) => Ok(quantile_of(&f(phase)?)),
                    PeriodicProfile::Table(slices) => {
                        let n = slices.len();
                        if n == 0 {
                            return Err(Error::DemandCoverage {
                                horizon: *period,
                                reason: "periodic table is empty".into(),
                            });
                        }
                        let s = phase / period * n as f64;
                        let i = (s.floor() as usize).min(n - 1);
                        let lam = s - i as f64;
                        let a = quantile_of(&slices[i]);
                        let b = quantile_of(&slices[(i + 1) % n]);
                        QuantileFunction::lerp(&a, &b, lam)
                    }
                }
            }
            DemandSignal::Sampled { times, slices } => {
                let eps = 1e-12 * times[times.len() - 1].abs().max(1.0);
                if t < times[0] - eps || t > times[times.len() - 1] + eps {
                    return Err(Error::DemandCoverage {
                        horizon: t,
                        reason: format!("no demand sample brackets t={t}"),
                    });
                }
                let j = times.partition_point(|&s| s <= t);
                if j == 0 {
                    return Ok(quantile_of(&slices[0]));
                }
                if j == times.len() {
                    return Ok(quantile_of(&slices[j - 1]));
                }
                let lam = (t - times[j - 1]) / (times[j] - times[j - 1]);
                let a = quantile_of(&slices[j - 1]);
                if lam == 0.0 {
                    return Ok(a);
                }
                QuantileFunction::lerp(&a, &quantile_of(&slices[j]), lam)
            }
        }
    }

    /// Demand density at time `t`.
    pub fn density_at(&self, t: f64) -> Result<Density> {
        match self {
            DemandSignal::Static(d) => Ok(d.clone()),
            DemandSignal::Periodic {
                period,
                profile: PeriodicProfile::Rule(f),
            } => f(t.rem_euclid(*period)),
            _ => density_from_quantile(&self.quantile_at(t)?),
        }
    }

    /// Reject a periodic rule whose slices at `t` and `t + period` differ
    /// (in `W2`) by more than `PERIODICITY` times the domain length, for
    /// `t` on the given grid.
    pub fn check_periodic(&self, times: &[f64]) -> Result<()> {
        if let DemandSignal::Periodic {
            period,
            profile: PeriodicProfile::Rule(f),
        } = self
        {
            let scale = self.domain()?.len();
            let tol = tolerances::PERIODICITY * scale;
            for &t in times {
                let mismatch = wasserstein2(&f(t)?, &f(t + period)?);
                if mismatch > tol {
                    return Err(Error::NotPeriodic { mismatch, tol });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(0.0, 10.0).unwrap()
    }

    #[test]
    fn sampled_interpolates_displacement() {
        let a = Density::dirac(dom(), 1.0).unwrap();
        let b = Density::dirac(dom(), 5.0).unwrap();
        let s = DemandSignal::sampled(vec![0.0, 2.0], vec![a, b]).unwrap();
        let q = s.quantile_at(0.5).unwrap();
        assert_eq!(q.eval(0.5), 2.0);
        assert!(s.check_coverage(2.0).is_ok());
        assert!(matches!(s.check_coverage(3.0), Err(Error::DemandCoverage { .. })));
        assert!(s.quantile_at(2.5).is_err());
    }

    #[test]
    fn periodic_table_wraps() {
        let a = Density::dirac(dom(), 1.0).unwrap();
        let b = Density::dirac(dom(), 3.0).unwrap();
        let s = DemandSignal::Periodic {
            period: 2.0,
            profile: PeriodicProfile::Table(vec![a, b]),
        };
        assert_eq!(s.quantile_at(1.5).unwrap().eval(0.3), 2.0);
        assert_eq!(s.quantile_at(3.0).unwrap().eval(0.3), 3.0);
    }

    #[test]
    fn non_periodic_rule_is_rejected() {
        let s = DemandSignal::periodic_rule(1.0, |t| Density::dirac(Domain::new(0.0, 10.0)?, 1.0 + t)).unwrap();
        assert!(matches!(s.check_periodic(&[0.0, 0.5]), Err(Error::NotPeriodic { .. })));
        let ok = DemandSignal::periodic_rule(1.0, |t| {
            Density::dirac(Domain::new(0.0, 10.0)?, 5.0 + (2.0 * std::f64::consts::PI * t).sin())
        })
        .unwrap();
        assert!(ok.check_periodic(&[0.0, 0.25, 0.5]).is_ok());
    }
}
