use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("zero vector: the anisotropy is not differentiable at the origin")]
    ZeroVector,
    #[error("finite-difference step {step:e} underflows")]
    StepUnderflow { step: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("gradient too small to define an adapted frame (|p'| = {norm:e})")]
    DegenerateGradient { norm: f64 },
    #[error("identity `{identity}` violated by {violation:e} at sample {sample:?}")]
    IdentityViolation {
        identity: String,
        violation: f64,
        sample: Vec<f64>,
    },
    #[error("vertical symmetry `{identity}` violated by {violation:e} at sample {sample:?}")]
    SymmetryViolation {
        identity: String,
        violation: f64,
        sample: Vec<f64>,
    },
    #[error("log-log slope of `{quantity}` is {fitted:.3}, expected {target:.3}")]
    SlopeMismatch {
        quantity: String,
        fitted: f64,
        target: f64,
    },
    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("ghost values are stale; close them before differentiating")]
    GhostNotClosed,
    #[error("contact angle out of range: cos(theta) = {cos_theta}")]
    AngleOutOfRange { cos_theta: f64 },
    #[error("non-finite value at node {node}")]
    NonFiniteField { node: usize },
    #[error("time step {dt:e} underflows")]
    TimestepUnderflow { dt: f64 },
    #[error("trajectory never reached a translating steady state")]
    NotSteady,
    #[error("pseudo-time iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("adaptive quadrature failed to reach tolerance")]
    QuadratureFailure,
    #[error("the primitive of the coefficient is not monotone near q = {q}")]
    NonMonotoneG { q: f64 },
    #[error("W = {value:e} is not positive at node {node}")]
    NonPositiveW { node: usize, value: f64 },
    #[error("grouped and direct T3 contractions differ: {direct:e} vs {grouped:e}")]
    GroupMismatch { direct: f64, grouped: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
