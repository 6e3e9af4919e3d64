//! Data-parallel helpers. With the `parallel` feature (default) the work is
//! distributed with rayon; without it the same entry points run
//! sequentially. Results are position-stable either way, so outputs are
//! byte-identical across both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential map over indexed items; always available and used by the
/// benchmark suite as the comparison baseline.
pub fn map_indexed_seq<T, U>(items: &[T], f: impl Fn(usize, &T) -> U) -> Vec<U> {
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Map over indexed items with the configured execution mode.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(usize, &T) -> U,
{
    map_indexed_seq(items, f)
}

/// Run two closures, in parallel when the feature is enabled.
#[cfg(feature = "parallel")]
pub fn join<A, B, FA, FB>(a: FA, b: FB) -> (A, B)
where
    A: Send,
    B: Send,
    FA: FnOnce() -> A + Send,
    FB: FnOnce() -> B + Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
pub fn join<A, B, FA, FB>(a: FA, b: FB) -> (A, B)
where
    FA: FnOnce() -> A,
    FB: FnOnce() -> B,
{
    (a(), b())
}
