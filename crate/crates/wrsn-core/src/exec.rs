//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the map helpers fan out over the
//! rayon pool; without it they run sequentially with identical results.
//! Output order always matches input order, so callers stay deterministic
//! regardless of thread count. Benchmarks compare the two paths via
//! [`map_collect`] vs [`map_collect_seq`].

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    I: Send,
    R: Send,
    F: Fn(I) -> R + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    F: Fn(I) -> R,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map, kept for benchmark comparison.
pub fn map_collect_seq<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    F: Fn(I) -> R,
{
    items.into_iter().map(f).collect()
}

/// Map `f` over index range `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over index range `0..n`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_order() {
        let out = map_collect((0..100).collect::<Vec<usize>>(), |i| i * 2);
        assert_eq!(out, (0..100).map(|i| i * 2).collect::<Vec<_>>());
        assert_eq!(out, map_collect_seq((0..100).collect(), |i| i * 2));
    }

    #[test]
    fn map_range_matches_sequential() {
        assert_eq!(map_range(17, |i| i + 1), (1..18).collect::<Vec<_>>());
    }
}
