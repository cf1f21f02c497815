//! Data-parallel execution of the per-element work inside vectorised protocols.
//!
//! Work is split into fixed chunks of [`CHUNK`] elements. Chunk boundaries do
//! not depend on the thread count, so chunk-indexed random sub-streams give the
//! same draws under both strategies. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially.

use std::ops::Range;

pub const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run chunks concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Runs `f(chunk_index, range)` over `0..n` and concatenates the outputs in order.
    pub fn map_chunks<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, Range<usize>) -> Vec<T> + Sync + Send,
    {
        let chunks = chunk_ranges(n);
        let parts: Vec<Vec<T>> = self.run(chunks, f);
        let mut out = Vec::with_capacity(n);
        for part in parts {
            out.extend(part);
        }
        out
    }

    /// Like [`Execution::map_chunks`] but keeps the per-chunk outputs separate.
    pub fn for_chunks<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, Range<usize>) -> T + Sync + Send,
    {
        self.run(chunk_ranges(n), f)
    }

    /// Maps independent jobs, e.g. whole simulated sessions.
    pub fn map<I, T, F>(self, items: Vec<I>, f: F) -> Vec<T>
    where
        I: Send,
        T: Send,
        F: Fn(I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    fn run<T, F>(self, chunks: Vec<(u64, Range<usize>)>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64, Range<usize>) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && chunks.len() > 1 {
            use rayon::prelude::*;
            return chunks.into_par_iter().map(|(i, r)| f(i, r)).collect();
        }
        chunks.into_iter().map(|(i, r)| f(i, r)).collect()
    }
}

fn chunk_ranges(n: usize) -> Vec<(u64, Range<usize>)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c as u64, c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}
