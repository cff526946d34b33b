//! Thin shim over rayon so the crate builds with or without the `parallel`
//! feature. Only order-preserving maps go through here: every reduction over
//! floats stays sequential so that report numbers are bitwise stable no
//! matter how many threads run.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Caps the global worker pool at `n` threads. Returns whether the cap took
/// effect: rayon's global pool can only be configured once per process, and
/// the sequential build has no pool to cap.
#[cfg(feature = "parallel")]
pub fn set_thread_cap(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn set_thread_cap(_n: usize) -> bool {
    false
}

/// Indexed variant: maps `0..n` through `f`, preserving index order.
#[cfg(feature = "parallel")]
pub fn par_map_idx<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map_idx<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
