//! Streaming estimation for logistic regression.
//!
//! The centerpiece is the truncated stochastic Newton recursion: each
//! observation moves the parameter along the gradient preconditioned by the
//! inverse of a weighted curvature accumulator, and that inverse is kept
//! current with one symmetric rank-one update per observation. Around it:
//!
//! * [`model`]: logistic link, Bernoulli weight, per-sample loss/gradient.
//! * [`riccati`]: the inverse accumulator and its rank-one update.
//! * [`estimators`]: truncated and plain stochastic Newton, SGD, averaged
//!   SGD and recursive least squares, plus a stream driver.
//! * [`oracle`]: Monte-Carlo estimates of the population objective, its
//!   gradient and its Hessian.
//! * [`inference`]: Wald-type confidence regions, intervals and tests.
//! * [`simulate`]: covariate designs and label generation.
//! * [`bench`]: seeded replication harness and summaries.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! thread-pool drivers live in the `stochnewton` companion crate; they plug
//! into the [`exec::Executor`] trait defined here.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bench;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod riccati;
pub mod rng;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use estimators::{Algorithm, EstimatorConfig, EstimatorState, StepSchedule, TruncationConfig};
pub use linalg::SquareMatrix;
pub use model::{Observation, Parameters};
pub use riccati::InverseAccumulator;
