//! Execution mode for the embarrassingly parallel sweeps.
//!
//! With the `parallel` feature (default) independent jobs are spread over the
//! rayon pool; without it every sweep runs on the calling thread. Results are
//! always returned in job-index order, so the output of a sweep never depends
//! on the mode.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Evaluates `job(i)` for `i in 0..n`, returning results in index order.
pub(crate) fn map_indexed<T, F>(exec: Execution, n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(job).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(job).collect()
        }
    }
}
