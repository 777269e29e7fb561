//! Thin wrappers that run on rayon when the `parallel` feature is enabled and
//! fall back to sequential iteration otherwise. Results never depend on the
//! schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..len).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Minimum of `f(i)` over `0..len`, or `None` for an empty range.
pub fn min_range<F>(len: usize, f: F) -> Option<usize>
where
    F: Fn(usize) -> usize + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).min()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).min()
    }
}
