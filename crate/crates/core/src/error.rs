use alloc::string::String;
use alloc::vec::Vec;

use crate::jet::JetError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("invalid chart: {0}")]
    Chart(&'static str),
    #[error("charts of the combined fields differ")]
    ChartMismatch,
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("warping function is not positive at t = {t}")]
    NonPositiveWarp { t: f64 },
    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("{what} needs derivative depth {needed}, jets allow {available}")]
    Depth {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("{what} is not defined in dimension {dim}")]
    Dimension { what: &'static str, dim: usize },
    #[error("class {0} needs a potential")]
    MissingPotential(&'static str),
    #[error("class {0} needs a vector field")]
    MissingVectorField(&'static str),
    #[error("vector field is not conformal (residual {residual:e})")]
    NotConformal { residual: f64 },
    #[error("gradient of the potential vanishes at {point:?}")]
    CriticalPoint { point: Vec<f64> },
    #[error("metric is not locally conformally flat at {point:?} (|W| = {weyl:e})")]
    NotConformallyFlat { point: Vec<f64>, weyl: f64 },
    #[error("parameters violate admissibility: {0}")]
    Admissibility(String),
    #[error("trajectory left the positive half-line at t = {t}")]
    PhiNonPositive { t: f64 },
    #[error("no return to the section within {steps} steps")]
    NoReturn { steps: usize },
    #[error("2q'' + q'^2 = {value:e} is not negative at t = {t}")]
    Denominator { t: f64, value: f64 },
    #[error("fiber scalar curvature {measured} differs from {expected}")]
    FiberCurvature { measured: f64, expected: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
