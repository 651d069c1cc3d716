//! Independent-job fan-out for sweeps and repeated runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel over the items; falls back to sequential without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

/// Applies `f` to every item, preserving order.
pub fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => items.iter().map(f).collect(),
    }
}
