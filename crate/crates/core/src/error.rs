use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("order {order} exceeds the enumeration cap {cap}")]
    OrderTooLarge { order: u32, cap: u32 },

    #[error("series precondition violated by {op}: coefficient {index} is {value}")]
    SeriesPrecondition {
        op: &'static str,
        index: usize,
        value: f64,
    },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("trajectory has no sample at t = {t} (needed for {purpose})")]
    InsufficientSamples { t: f64, purpose: &'static str },

    #[error("z = {re}{im:+}i lies within {tolerance:e} of the branch cut [{lo}, {hi}]")]
    BranchAmbiguity {
        re: f64,
        im: f64,
        lo: f64,
        hi: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    #[error("zero denominator")]
    ZeroDenominator,
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
