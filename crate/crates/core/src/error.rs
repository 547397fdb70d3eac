use thiserror::Error;

/// Errors raised while building or evaluating the numerical objects of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid driver: {0}")]
    InvalidDriver(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid mollifier profile: {0}")]
    InvalidProfile(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid class-G function: {0}")]
    InvalidSigma(String),

    #[error("invalid jump measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid partition: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("t = {t} is outside the half-open domain ({a}, {b}]")]
    Domain { t: f64, a: f64, b: f64 },

    #[error("interval bounds out of order: u = {u} > v = {v}")]
    Order { u: f64, v: f64 },

    #[error("t = {0} is not a jump epoch of the driver")]
    NotAJump(f64),

    #[error("step count {steps} exceeds the configured cap {cap}")]
    StepCap { steps: f64, cap: u64 },

    #[error("domain mismatch: [{a1}, {b1}] vs [{a2}, {b2}]")]
    DomainMismatch { a1: f64, b1: f64, a2: f64, b2: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
