//! Seeded, splittable random streams.
//!
//! Every stochastic decision in a run draws from its own [`RngStream`],
//! keyed by `(seed, stream_id)`. The generator is ChaCha8 with the stream id
//! written into the cipher's stream word, so two ids never share keystream
//! and the output is identical on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// What a stream is used for. Combined with a kernel index to form the
/// stream id, so adding a baseline never perturbs the draws of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// Kernel-selection coin `c` of the multi-kernel loop.
    Select = 1,
    /// Sparse update coin `Z` of the SPA learner.
    Sample = 2,
    /// Random eviction in budget learners.
    Evict = 3,
    /// Instance permutation for one repetition.
    Permute = 4,
    /// Synthetic data generation.
    Synth = 5,
}

/// Stream id for `(kernel, purpose)`.
pub fn stream_id(kernel: usize, purpose: Purpose) -> u64 {
    ((kernel as u64) << 8) | purpose as u64
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn for_kernel(seed: u64, kernel: usize, purpose: Purpose) -> Self {
        Self::new(seed, stream_id(kernel, purpose))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Returns `true` with probability exactly `p`; always consumes one draw.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("bernoulli probability {p} outside [0,1]")));
        }
        Ok(self.next_uniform() < p)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        self.rng.random_range(0..n)
    }

    /// Fisher–Yates shuffle of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.random_range(0..=i);
            order.swap(i, j);
        }
        order
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
