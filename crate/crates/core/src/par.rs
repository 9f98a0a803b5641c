//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Parallelism::Parallel`] fans out
//! over the current rayon pool; without it both modes run on the calling
//! thread. Output order always matches input order.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

pub fn map<T, R, F>(items: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (`None` = rayon's
/// default sizing).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build thread pool");
        return pool.install(f);
    }
    let _ = threads;
    f()
}
