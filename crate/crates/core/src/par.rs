//! Deterministic chunked map-reduce.
//!
//! Work is split into fixed-size chunks, chunks are mapped in parallel, and
//! the partial results are folded in chunk order. The result therefore does
//! not depend on thread count or scheduling.

use rayon::prelude::*;

pub const DEFAULT_CHUNK: usize = 4096;

pub fn chunked_reduce<T, A, F, M>(items: &[T], chunk: usize, init: A, map: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    F: Fn(&[T]) -> A + Sync,
    M: Fn(A, A) -> A,
{
    let parts: Vec<A> = items.par_chunks(chunk.max(1)).map(&map).collect();
    parts.into_iter().fold(init, merge)
}
