use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("quantile not monotone at z={z}: drop of {drop:e} exceeds tolerance {tol:e}")]
    NonMonotone { z: f64, drop: f64, tol: f64 },

    #[error("map is not monotone nondecreasing near x={x}")]
    NonMonotoneMap { x: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("characteristics crossed at t={t}: order violated by {gap:e} (tolerance {tol:e})")]
    CharacteristicsCrossed { t: f64, gap: f64, tol: f64 },

    #[error("characteristic left the domain at t={t} (x={x})")]
    LeftDomain { t: f64, x: f64 },

    #[error("input constraint violated on flat interval [{z_lo}, {z_hi}]: velocity spread {spread:e} exceeds {tol:e}")]
    InputConstraint {
        z_lo: f64,
        z_hi: f64,
        spread: f64,
        tol: f64,
    },

    #[error("demand does not cover [0, {horizon}]: {reason}")]
    DemandCoverage { horizon: f64, reason: String },

    #[error("demand is not periodic: W2(D_0, D_period) = {mismatch:e} exceeds {tol:e}")]
    NotPeriodic { mismatch: f64, tol: f64 },

    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),

    #[error("motion-cost identity violated at t={t}: |{x_form:e} - {z_form:e}| exceeds {tol:e}")]
    MotionIdentity {
        t: f64,
        x_form: f64,
        z_form: f64,
        tol: f64,
    },

    #[error("resource tracks {left} and {right} swapped order at t={t}")]
    OrderViolation { t: f64, left: usize, right: usize },

    #[error("time grids are inconsistent: {0}")]
    GridMismatch(String),
}

impl Error {
    /// Name of the library module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidDensity(_) | Error::NonMonotone { .. } | Error::NonMonotoneMap { .. } => {
                "measures"
            }
            Error::CharacteristicsCrossed { .. }
            | Error::LeftDomain { .. }
            | Error::InputConstraint { .. } => "transport",
            Error::DemandCoverage { .. }
            | Error::NotPeriodic { .. }
            | Error::MotionIdentity { .. }
            | Error::OrderViolation { .. }
            | Error::GridMismatch(_) => "regimes",
            Error::InstanceTooLarge(_) => "oracle",
            Error::InvalidParameter { .. } => "input",
        }
    }

    /// True for errors caused by malformed inputs rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDensity(_)
                | Error::InvalidParameter { .. }
                | Error::DemandCoverage { .. }
                | Error::NotPeriodic { .. }
                | Error::InstanceTooLarge(_)
                | Error::GridMismatch(_)
        )
    }
}

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
