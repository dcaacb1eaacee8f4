//! Rayon-backed Monte Carlo runner.

use rayon::prelude::*;
use tvarma_core::mc::{run_chunk, Accumulator, McRng, Runner, CHUNK};

/// Runs chunks of replications on the rayon pool and merges them in chunk
/// order, so results are bit-identical to [`tvarma_core::mc::Sequential`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Runner for Parallel {
    fn run<A, F>(&self, n: u64, seed: u64, init: &A, body: F) -> A
    where
        A: Accumulator,
        F: Fn(&mut A, &mut McRng, u64) + Sync,
    {
        let parts: Vec<A> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| run_chunk(chunk, n, seed, init, &body))
            .collect();
        let mut total = init.clone();
        for p in parts {
            total.merge(p);
        }
        total
    }
}

/// Installs a global pool with `threads` workers (0 keeps the default).
pub fn init_threads(threads: usize) {
    if threads > 0 {
        // A second call finds the pool already built, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}
