//! Work distribution for the data-parallel loops (Monte-Carlo samples,
//! experiment repetitions).
//!
//! With the `parallel` feature the loops run on the rayon pool; without it
//! [`Parallelism::Parallel`] degrades to the sequential path. Both paths
//! produce identical results: per-item outputs are integer counts merged by
//! exact addition, and ordered maps keep item order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether work will actually fan out in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

const CHUNK: u64 = 16;

/// Runs `f(item, acc)` for every item in `0..n_items`, each chunk of items
/// sharing an accumulator of `width` counters, and returns the element-wise
/// sum of all accumulators.
pub fn sum_counts<F>(mode: Parallelism, n_items: u64, width: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, &mut [u64]) + Sync,
{
    let n_chunks = n_items.div_ceil(CHUNK);
    let run_chunk = |c: u64| {
        let mut acc = vec![0u64; width];
        let end = ((c + 1) * CHUNK).min(n_items);
        for item in c * CHUNK..end {
            f(item, &mut acc);
        }
        acc
    };
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };

    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n_chunks)
            .into_par_iter()
            .map(run_chunk)
            .reduce(|| vec![0u64; width], merge);
    }
    let _ = mode;
    (0..n_chunks).map(run_chunk).fold(vec![0u64; width], merge)
}

/// Fallible [`sum_counts`]: the first error aborts the reduction.
pub fn try_sum_counts<F, E>(
    mode: Parallelism,
    n_items: u64,
    width: usize,
    f: F,
) -> Result<Vec<u64>, E>
where
    F: Fn(u64, &mut [u64]) -> Result<(), E> + Sync,
    E: Send,
{
    let n_chunks = n_items.div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Result<Vec<u64>, E> {
        let mut acc = vec![0u64; width];
        let end = ((c + 1) * CHUNK).min(n_items);
        for item in c * CHUNK..end {
            f(item, &mut acc)?;
        }
        Ok(acc)
    };
    let merge = |mut a: Vec<u64>, b: Vec<u64>| -> Result<Vec<u64>, E> {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        Ok(a)
    };

    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n_chunks)
            .into_par_iter()
            .map(run_chunk)
            .try_reduce(|| vec![0u64; width], merge);
    }
    let _ = mode;
    let mut total = vec![0u64; width];
    for c in 0..n_chunks {
        total = merge(total, run_chunk(c)?)?;
    }
    Ok(total)
}

/// Ordered map over `0..n`.
pub fn map_ordered<T, F>(mode: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(&f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}
