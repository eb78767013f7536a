//! Execution policy for data-parallel loops.
//!
//! Every hot loop in the crate (feature extraction, ANN queries, LDA
//! E-steps, betweenness sources, grid search) is written against the
//! helpers here. Results are always collected in input order and
//! reductions are folded sequentially over fixed-size chunks, so the
//! output does not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    /// Plain iterator on the calling thread.
    Sequential,
    /// Rayon work-stealing pool. Falls back to sequential when the crate is
    /// built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(exec: Exec, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fallible variant of [`map`]; returns the first error in input order.
pub fn try_map<T, U, E, F>(exec: Exec, items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}

/// Chunked map-reduce with a deterministic merge order.
///
/// `items` is cut into chunks of `chunk` elements, each chunk is folded
/// into a fresh accumulator from `init`, and the partial accumulators are
/// merged left to right. Floating-point results are therefore identical
/// between sequential and parallel runs.
pub fn fold_chunks<T, A, I, F, M>(exec: Exec, items: &[T], chunk: usize, init: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize, &T) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let starts: Vec<usize> = (0..items.len()).step_by(chunk).collect();
    let partials = map(exec, &starts, |&start| {
        let mut acc = init();
        let end = (start + chunk).min(items.len());
        for (i, item) in items[start..end].iter().enumerate() {
            fold(&mut acc, start + i, item);
        }
        acc
    });
    let mut out = init();
    for p in partials {
        merge(&mut out, p);
    }
    out
}

/// Number of worker threads available to parallel loops.
pub fn threads(exec: Exec) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}
