//! Data-parallel fan-out over independent jobs (seeds, arms, grid points).
//!
//! With the `parallel` feature (default) the work runs on rayon; without it
//! everything falls back to a plain sequential loop with identical results,
//! since jobs never share mutable state and outputs keep input order.

/// Maps `f` over `jobs` in parallel when the `parallel` feature is enabled.
/// Output order always matches input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(jobs: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    jobs.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(jobs: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    seq_map(jobs, f)
}

/// Sequential reference path; the benchmark suite compares this against
/// [`par_map`] on the same workloads.
pub fn seq_map<T, R, F>(jobs: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    jobs.into_iter().map(f).collect()
}

/// Runs `body` on a pool with `workers` threads when parallelism is
/// compiled in; `None` means the default pool size. Without the `parallel`
/// feature the body just runs on the current thread.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: Option<usize>, body: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build thread pool")
            .install(body),
        _ => body(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: Option<usize>, body: impl FnOnce() -> R + Send) -> R {
    body()
}
