//! Thin indirection over rayon so the crate also builds with the `parallel`
//! feature disabled. Both paths produce bit-identical results because all
//! kernel arithmetic is exact integer math; only wall-clock time differs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items` preserving order.
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, R>(
    items: &[T],
    min_len: usize,
    f: impl Fn(&T) -> R + Sync + Send,
) -> Vec<R>
where
    T: Sync,
    R: Send,
{
    items
        .par_iter()
        .with_min_len(min_len.max(1))
        .map(f)
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, R>(items: &[T], _min_len: usize, f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Splits `data` into consecutive `chunk`-sized slices and runs
/// `f(chunk_index, chunk)` on each.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk_mut<T>(
    data: &mut [T],
    chunk: usize,
    f: impl Fn(usize, &mut [T]) + Sync,
) where
    T: Send,
{
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk_mut<T>(data: &mut [T], chunk: usize, f: impl Fn(usize, &mut [T])) {
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}
