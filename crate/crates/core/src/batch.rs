//! Deterministic parallel Monte Carlo.
//!
//! Work is cut into fixed-size chunks. Chunk `i` always draws from substream
//! `i` of the parent stream and results come back in chunk order, so the
//! output does not depend on the number of worker threads.

use crate::rng::RandomStream;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Samples per chunk.
pub const CHUNK: u64 = 8_192;

/// Number of worker threads to use when the caller does not say.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `work(stream_i, count_i)` over the chunks of `n` samples and returns
/// the per-chunk results in chunk order.
pub fn chunked<T, F>(stream: &RandomStream, n: u64, jobs: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(RandomStream, u64) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK) as usize;
    let size = |i: usize| CHUNK.min(n - i as u64 * CHUNK);
    let jobs = jobs.max(1).min(chunks.max(1));
    if jobs == 1 {
        return (0..chunks)
            .map(|i| work(stream.split(i as u64), size(i)))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..chunks).map(|_| None).collect();
    let done: Vec<Vec<(usize, T)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= chunks {
                            break out;
                        }
                        out.push((i, work(stream.split(i as u64), size(i))));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    for (i, v) in done.into_iter().flatten() {
        slots[i] = Some(v);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every chunk ran"))
        .collect()
}

/// Draws `n` values of `draw` in parallel, in a thread-count independent order.
pub fn collect<F>(stream: &RandomStream, n: u64, jobs: usize, draw: F) -> Vec<f64>
where
    F: Fn(&mut RandomStream) -> f64 + Sync,
{
    chunked(stream, n, jobs, |mut s, m| {
        (0..m).map(|_| draw(&mut s)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn result_independent_of_jobs() {
        let s = RandomStream::new(9);
        let a = collect(&s, 30_000, 1, |r| r.random::<f64>());
        let b = collect(&s, 30_000, 4, |r| r.random::<f64>());
        assert_eq!(a, b);
        assert_eq!(a.len(), 30_000);
    }

    #[test]
    fn empty_batch() {
        let s = RandomStream::new(1);
        assert!(collect(&s, 0, 3, |r| r.random::<f64>()).is_empty());
    }
}
