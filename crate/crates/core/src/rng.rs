//! Seeded, splittable random source.
//!
//! All randomness in the crate flows through [`Rng`]. A child stream is
//! derived with [`Rng::split`] (or [`split_seed`]), which hashes the parent
//! seed and a stream index through SplitMix64. Children do not depend on how
//! many draws the parent has made, so per-burst streams are independent of
//! list order and of each other.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const ALGORITHM: &str = "chacha12";

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    /// Independent child stream `stream` of this generator's seed.
    pub fn split(&self, stream: u64) -> Rng {
        Rng::new(split_seed(self.seed, stream))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(seed ^ splitmix64(stream))`.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
