//! Execution policy for batch loops.
//!
//! Work is cut into fixed-size chunks, each chunk produces a partial result,
//! and the partials are folded left-to-right in chunk order. The chunking does
//! not depend on the thread count, so sequential and parallel runs agree bit
//! for bit.

use serde::{Deserialize, Serialize};

/// Number of collocation points handled by one work item.
pub const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPolicy {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential execution.
    #[default]
    Parallel,
}

impl ExecPolicy {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Maps `f` over `0..n_chunks` and returns the partial results in chunk order.
pub fn map_chunks<T, F>(policy: ExecPolicy, n_chunks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..n_chunks).into_par_iter().map(&f).collect();
    }
    let _ = policy;
    (0..n_chunks).map(f).collect()
}

/// Splits `0..len` into consecutive ranges of at most [`CHUNK`] items.
pub fn chunk_ranges(len: usize) -> Vec<std::ops::Range<usize>> {
    (0..len.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(len)).collect()
}
