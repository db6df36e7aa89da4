//! Trial execution: data-parallel via rayon behind the `parallel` feature,
//! with an always-available sequential driver.
//!
//! Both paths map jobs to results in input order; since every job derives
//! its own random streams from the master seed, outputs are bit-identical
//! regardless of the driver or thread count.

/// Map jobs to results in order, using the rayon pool when requested and
/// compiled in.
pub fn map_jobs<T, R, F>(jobs: Vec<T>, parallel: bool, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return jobs.into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    map_jobs_sequential(jobs, f)
}

/// Sequential driver (also the fallback when the `parallel` feature is off).
pub fn map_jobs_sequential<T, R, F>(jobs: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    jobs.into_iter().map(f).collect()
}

/// Whether the parallel driver is compiled in.
pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}
