//! Pluggable execution of independent work items.
//!
//! Period scans and simulation studies evaluate many independent items.
//! They are expressed against [`Executor`] so that a thread pool can be
//! supplied by a std front end; results are always returned in index order,
//! which keeps output independent of scheduling.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
