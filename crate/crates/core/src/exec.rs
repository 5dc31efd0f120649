//! Execution policy for the data-parallel inner loops.
//!
//! Every hot loop in the crate (per-mode tridiagonal solves, per-row FFTs,
//! per-mode quadratures, randomized property sweeps) is expressed through
//! [`Exec`]. With the `parallel` feature the `Parallel` policy dispatches to
//! rayon; without it both policies run the same sequential code. Reductions
//! are never performed inside the parallel section: workers only fill
//! disjoint output slots, and callers fold the results in index order, so
//! both policies produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Apply `f(chunk_index, chunk)` to consecutive `chunk`-sized pieces of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        assert!(chunk > 0);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Evaluate `f(i)` for `i in 0..n`, returning results in index order.
    pub fn map<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}
