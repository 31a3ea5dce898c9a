//! Replication-level parallelism with a sequential fallback.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How independent replications are scheduled. Results never depend on the
/// choice: outputs are collected in index order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Uses a dedicated pool when `workers` is set, otherwise the global one.
    /// Runs sequentially when built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indices<T, F>(n: u64, exec: Execution, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok((0..n).map(f).collect()),
        Execution::Parallel => parallel_map(n, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect();
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| crate::error::Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: u64, _workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    Ok((0..n).map(f).collect())
}
