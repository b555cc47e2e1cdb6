//! File formats, parallel execution and the command line on top of
//! [`stochnewton_core`].
//!
//! * [`data`]: CSV observation streams (`y,x1,...,xd`);
//! * [`snapshot`]: JSON estimator snapshots for resuming and inference;
//! * [`parallel`]: a rayon-backed [`Executor`](stochnewton_core::exec::Executor);
//! * [`report`]: benchmark CSV output;
//! * [`config`] and [`cli`]: the `stochnewton` binary.

pub mod cli;
pub mod config;
pub mod data;
pub mod parallel;
pub mod report;
pub mod snapshot;

pub use stochnewton_core as core;
