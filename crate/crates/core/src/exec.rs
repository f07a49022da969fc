//! Serial/parallel execution switch.
//!
//! Every parallel path in the crate produces a value per independent index and
//! leaves any reduction to the caller, which folds the values in index order.
//! Results are therefore bit-identical for [`Execution::Serial`],
//! [`Execution::Parallel`], and any worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// One item after another on the calling thread.
    Serial,
    /// Items spread over the rayon pool. Falls back to serial when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work concurrently.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Writes `f(i)` into `out[i]` for every slot.
pub fn fill_indexed<F>(out: &mut [f64], exec: Execution, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = f(i));
            return;
        }
    }
    let _ = exec;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Runs `f` with at most `threads` workers (0 = library default).
///
/// Without the `parallel` feature this simply calls `f`.
pub fn with_thread_cap<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(f);
            }
        }
    }
    let _ = threads;
    f()
}

/// Number of worker threads parallel sections will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
