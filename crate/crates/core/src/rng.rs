//! Splittable, seedable random streams.
//!
//! A stream is identified by `(seed, stream_id)`. Children are derived by
//! hashing the parent identity with a child index, so the draws of any
//! episode depend only on where it sits in the experiment tree, never on the
//! order in which episodes are executed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Root stream of an experiment.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives an independent child stream. Pure in `(self.seed, self.stream_id, child_id)`;
    /// draws already taken from `self` do not affect the child.
    pub fn split(&self, child_id: u64) -> RngStream {
        let seed = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(GOLDEN_GAMMA)));
        let seed = splitmix64(seed.wrapping_add(child_id));
        RngStream::new(seed, child_id)
    }

    /// Uniform draw in `[-half_width, half_width]`.
    pub fn symmetric_uniform(&mut self, half_width: f64) -> f64 {
        if half_width == 0.0 {
            return 0.0;
        }
        let u = self.unit();
        (2.0 * u - 1.0) * half_width
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn split_stream(parent: &RngStream, child_id: u64) -> RngStream {
    parent.split(child_id)
}

impl RngCore for RngStream {
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
