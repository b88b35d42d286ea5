//! Splittable, counter-based random streams.
//!
//! A [`SeedTree`] node is a 64-bit key. Children are derived by mixing the
//! parent key with a label, so `(master, a, b)` always names the same stream
//! no matter how many other streams were drawn before it. Leaves are ChaCha8
//! generators keyed by the node.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand::Rng;

pub type Stream = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedTree {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self {
            key: splitmix64(master),
        }
    }

    pub fn child(self, label: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(label.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn stream(self) -> Stream {
        let mut seed = [0u8; 32];
        let mut k = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            k = splitmix64(k);
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Uniform variate on the open interval (0, 1), safe for inverse-CDF sampling.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let bits = rng.gen::<u64>() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
