//! Portable, seekable random streams.
//!
//! Every random draw in the crate comes from a [`Stream`]: a ChaCha8 generator
//! whose 256-bit key is expanded from a `u64` seed with SplitMix64 and whose
//! 64-bit ChaCha stream id selects an independent substream. A substream is
//! addressed by `(seed, domain, index)`:
//!
//! ```text
//! key       = SplitMix64(seed) x 4, little-endian
//! stream_id = (domain << 40) | index
//! ```
//!
//! ChaCha8 output is fully specified by its key, stream id and block counter,
//! so every draw is reproducible on any platform and independent of how work
//! is scheduled across threads. Floating-point draws use the top 53 bits of
//! one `u64`; integer draws use rejection sampling. Neither depends on the
//! `rand` crate's distribution code, whose algorithms change between releases.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Substream domains. Each purpose gets its own domain so that adding draws
/// to one phase never shifts the draws seen by another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    /// Cloud member `index`: initial weights, then fresh matrices for deleted layers.
    Cloud = 1,
    /// Shuffling during refinement of the selected cloud candidate.
    Refine = 2,
    /// Initial weights and shuffles for full training.
    FullTraining = 3,
    /// Neuron choice (and layer-removal draws) for random pruning repeat `index`.
    RandomPrune = 4,
    /// Fine-tuning shuffles after random pruning repeat `index`.
    RandomFineTune = 5,
    /// Layer-removal draws for magnitude pruning.
    MagnitudePrune = 6,
    /// Fine-tuning shuffles after magnitude pruning.
    MagnitudeFineTune = 7,
    /// Stratified train/test splitting.
    Split = 8,
    /// Free for tests and tools.
    Scratch = 15,
}

const INDEX_BITS: u32 = 40;

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Stream {
    /// Stream 0 of the key derived from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Stream {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn substream(seed: u64, domain: Domain, index: u64) -> Self {
        assert!(
            index < (1 << INDEX_BITS),
            "substream index {index} too large"
        );
        let mut s = Stream::new(seed);
        s.inner.set_stream(((domain as u64) << INDEX_BITS) | index);
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`. Exact: `2u - 1` is representable for every 53-bit `u`.
    pub fn symmetric_unit(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let r = self.next_u64();
            if r <= zone {
                return (r % n) as usize;
            }
        }
    }

    /// Fisher–Yates, drawing from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, uniformly, returned sorted.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
