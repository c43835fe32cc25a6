use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cutoff insufficient: {0}")]
    CutoffInsufficient(String),

    #[error("mode budget exceeded: reconstruction error {tail:.3e} exceeds tolerance {tol:.3e}")]
    ModeBudgetExceeded { tail: f64, tol: f64 },

    #[error("integrator failed to converge at t = {t}: step size {step:e} underflowed")]
    NonConvergence { t: f64, step: f64 },

    #[error("cutoff breach at t = {t}: top-of-basis mass {mass:e}")]
    CutoffBreach { t: f64, mass: f64 },

    #[error("gauge reduction invalid: {0}")]
    GaugeReductionInvalid(String),

    #[error("zero state has no normalized distribution")]
    ZeroState,

    #[error("mismatched mode sets: {0}")]
    ModeMismatch(String),

    #[error("unknown mode: {0}")]
    UnknownMode(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}
