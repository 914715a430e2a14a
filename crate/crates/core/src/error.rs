use thiserror::Error;

use crate::grassmann::Parity;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible Grassmann algebras: {left} vs {right} generators")]
    IncompatibleAlgebras { left: usize, right: usize },

    #[error("{requested} generators requested, at most {max} supported")]
    TooManyGenerators { requested: usize, max: usize },

    #[error("element is not homogeneous of parity {expected:?}")]
    MixedParity { expected: Parity },

    #[error("derivative of order {needed} required, oracle provides up to {available}")]
    DerivativeOrderUnavailable { needed: usize, available: usize },

    #[error("point {point:?} is outside the field's domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("derivation is not parity-consistent: {0}")]
    ParityInconsistent(String),

    #[error("derivation fails the Leibniz consistency probe: {0}")]
    LeibnizInconsistent(String),

    #[error("integration diverged; last valid time {last_valid_t}")]
    Divergence { last_valid_t: f64 },

    #[error("function is not strictly positive at {point:?} (value {value})")]
    NonPositive { point: Vec<f64>, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),

    #[error("connection is not odd-trivial: {0}")]
    NotOddTrivial(String),

    #[error("fields are not parallel at {point:?}")]
    NotParallel { point: Vec<f64> },

    #[error("transport is inconsistent: {0}")]
    Inconsistent(String),

    #[error("invalid reparametrization: {0}")]
    InvalidReparametrization(String),

    #[error("transport axiom spot-check failed: {0}")]
    AxiomViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("schema error: {0}")]
    Schema(String),
}
