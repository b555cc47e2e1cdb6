//! Pluggable execution of independent, indexed jobs.
//!
//! Monte-Carlo blocks and benchmark replications are expressed as
//! `Fn(index) -> T`; an executor evaluates them and returns the results in
//! index order. Merging in index order makes every reduction bit-identical
//! whatever the executor or worker count.

use alloc::vec::Vec;

pub trait Executor {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
