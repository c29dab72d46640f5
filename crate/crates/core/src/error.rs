use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent {p} outside the open support ({lo}, {hi})")]
    OutsideSupport { p: f64, lo: f64, hi: f64 },

    #[error("invalid support ({lo}, {hi}): need 1 <= lo < hi")]
    InvalidSupport { lo: f64, hi: f64 },

    #[error("empty intersection of exponent domains")]
    EmptyDomain,

    #[error("non-finite value {value} at abscissa {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("grid needs at least {needed} nodes, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("grid nodes must be strictly increasing (violation at index {index})")]
    NotIncreasing { index: usize },

    #[error("function is not convex on [{lo}, {hi}]")]
    NotConvex { lo: f64, hi: f64 },

    #[error("function is not strictly increasing on [{lo}, {hi}]")]
    NotMonotone { lo: f64, hi: f64 },

    #[error("{what} must be below the threshold {threshold}, got {value}")]
    BelowThreshold {
        what: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("Orlicz gauge is unbounded: the Young function is too flat")]
    GaugeUnbounded,

    #[error("measure value {delta} exceeds total mass {total}")]
    MeasureTooLarge { delta: f64, total: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("the random field is not declared mean zero")]
    NotMeanZero,

    #[error("no moment source available for {0}")]
    NoMomentSource(String),

    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("covariance not available for this model")]
    MissingCovariance,

    #[error("non-finite sample (seed {seed}, index {index})")]
    NonFiniteSample { seed: u64, index: u64 },

    #[error("too few replicas: {got} < {needed}")]
    TooFewReplicas { needed: usize, got: usize },

    #[error("unbounded supremum at exponent {p}")]
    UnboundedSupremum { p: f64 },

    #[error("truth not available for this problem")]
    MissingTruth,
}
