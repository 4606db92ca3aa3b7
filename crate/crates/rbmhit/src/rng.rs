//! Deterministic per-path random number streams.
//!
//! Every simulated path draws from its own stream, derived from a
//! `(master_seed, path_index)` pair. ChaCha supports 2^64 independent streams
//! per seed, so path `i` always sees the same sequence regardless of how many
//! worker threads are running or in which order paths execute. Merging results
//! is integer hit-count addition, which makes whole-run output bit-identical
//! across worker counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A deterministic random stream owned by exactly one path at a time.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

/// Derives the stream for path `path_index` of a run seeded with `master_seed`.
///
/// Identical `(master_seed, path_index)` pairs yield identical streams;
/// distinct indices select distinct ChaCha streams over the same key.
pub fn seed_path_rng(master_seed: u64, path_index: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
    inner.set_stream(path_index);
    RngStream { inner }
}

impl RngStream {
    /// Draws a standard normal variate.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Draws a uniform variate in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Draws a uniform integer in `[0, n)`.
    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }
}

/// Free-function form of [`RngStream::normal`].
pub fn normal_draw(rng: &mut RngStream) -> f64 {
    rng.normal()
}
