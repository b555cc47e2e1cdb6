use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite estimator state at step {step}")]
    NonFinite { step: u64 },

    #[error("operation requires {expected} but the estimator is {found}")]
    WrongAlgorithm { expected: &'static str, found: &'static str },

    #[error("estimator carries no inverse accumulator")]
    NoAccumulator,

    #[error("observation stream is empty")]
    EmptyStream,

    #[error("record for {algorithm} replication {replication} has no checkpoint at n = {n}")]
    MissingCheckpoint { algorithm: &'static str, replication: u32, n: u64 },

    #[error("every step-size candidate diverged")]
    AllDiverged,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    /// Attaches the 1-based index of the observation being processed.
    pub fn at_step(self, step: u64) -> Error {
        match self {
            e @ (Error::NonFinite { .. } | Error::AtStep { .. }) => e,
            e => Error::AtStep { step, source: Box::new(e) },
        }
    }

    /// Observation index carried by the error, if any.
    pub fn step(&self) -> Option<u64> {
        match self {
            Error::NonFinite { step } | Error::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
