//! Order-preserving map over replicate indices, parallel when the
//! `parallel` feature is on.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(start: usize, end: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (start..end).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(start: usize, end: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (start..end).map(f).collect()
}
