//! Switch between rayon-backed and sequential iteration.
//!
//! Every data-parallel loop in the crate goes through [`map`] so results come
//! back in input order regardless of how the work was scheduled. Building
//! without the `parallel` feature turns [`Execution::Parallel`] into a
//! sequential loop.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
    /// Parallel with at most this many worker threads.
    Limited(usize),
}

impl Execution {
    pub fn from_parallelism(n: usize) -> Self {
        match n {
            0 => Execution::Parallel,
            1 => Execution::Sequential,
            n => Execution::Limited(n),
        }
    }

    /// True when this build can actually run work on more than one thread.
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential | Execution::Limited(1))
    }
}

/// Applies `f` to every item, preserving input order in the output.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel => items.par_iter().map(f).collect(),
            Execution::Limited(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(e) => {
                    log::warn!("falling back to sequential execution: {e}");
                    items.iter().map(f).collect()
                }
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        items.iter().map(f).collect()
    }
}
