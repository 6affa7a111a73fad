use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite field sample at t = {t}, x = {x:?}")]
    NonFiniteField { t: f64, x: [f64; 3] },

    #[error("retarded-time invariant violated: {0}")]
    RetardedTime(String),

    #[error("particle {0} has no force history; the acceleration term cannot be assembled")]
    MissingForce(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("particle {particle} lies outside the deposition grid margin")]
    OutsideGrid { particle: usize },

    #[error("negative integrand value {value:e} sampled; cone integrals need g >= 0")]
    NegativeIntegrand { value: f64 },

    #[error("source violates the continuity equation by {residual:e}")]
    ContinuityViolation { residual: f64 },

    #[error("Picard iteration diverged at n = {n}: D_n = {distance:e} exceeds {limit:e}")]
    Diverged { n: usize, distance: f64, limit: f64 },

    #[error("particle {particle} reached speed {speed} at t = {t}")]
    SpeedLimit { particle: usize, t: f64, speed: f64 },

    #[error("kernel bound check failed: {0}")]
    KernelBound(String),

    #[error("no Gronwall envelope with c_T <= {cap}")]
    NoEnvelope { cap: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown {kind} '{name}'; known: {known}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}
