//! Counter-addressed random streams.
//!
//! A stream is identified by `(base_seed, stream_id)`. The generator is
//! ChaCha8 keyed by `base_seed` with its 64-bit stream word set to
//! `stream_id`, so two streams with different ids never share keystream.
//! Replicate `i` of a Monte Carlo experiment runs on [`RandomStream::replicate`]`(i)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    base_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream_id);
        Self {
            base_seed,
            stream_id,
            rng,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream `i` under a key derived from this stream's identity.
    ///
    /// Depends only on `(base_seed, stream_id, i)`, never on how much of this
    /// stream has been consumed.
    pub fn replicate(&self, i: u64) -> Self {
        Self::new(derive_key(self.base_seed, self.stream_id), i)
    }

    /// Child stream for a named sub-experiment, e.g. one model of a report.
    pub fn child(&self, label: &str) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in label.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
        Self::new(derive_key(self.base_seed, self.stream_id ^ h), h)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_key(base_seed: u64, stream_id: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ stream_id.rotate_left(32))
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
