//! Reproducible random streams.
//!
//! Every random draw in the library comes from a ChaCha8 stream addressed by
//! `(master seed, lane, substream, replicate)`. The first three select the
//! cipher key, the replicate selects the ChaCha stream id. A replicate's
//! randomness therefore never depends on which worker runs it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Substream ids reserved for non-layer purposes. Layer `j` of a Lévy measure
/// uses substream `j`.
pub mod substream {
    pub const KILLING_TIME: u64 = 1 << 40;
    pub const INVARIANCE_STEPS: u64 = (1 << 40) + 1;
    pub const MC_INTEGRAL: u64 = (1 << 40) + 2;
}

/// Address of one replicate's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct StreamKey {
    pub master: u64,
    /// Separates independent copies drawn for the same replicate.
    pub lane: u64,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(master: u64) -> Self {
        StreamKey { master, lane: 0, replicate: 0 }
    }

    pub fn with_lane(self, lane: u64) -> Self {
        StreamKey { lane, ..self }
    }

    pub fn for_replicate(self, replicate: u64) -> Self {
        StreamKey { replicate, ..self }
    }

    pub fn rng(&self, substream: u64) -> ChaCha8Rng {
        let mut state = self.master
            ^ self.lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ substream.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.replicate);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval `(0, 1)`.
pub(crate) fn open01<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_address_same_stream() {
        let k = StreamKey::new(7).with_lane(1).for_replicate(99);
        let a: Vec<u64> = k.rng(3).random_iter().take(8).collect();
        let b: Vec<u64> = k.rng(3).random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn addresses_are_distinct() {
        let base = StreamKey::new(7);
        let draw = |k: StreamKey, s: u64| k.rng(s).random::<u64>();
        let x = draw(base, 0);
        assert_ne!(x, draw(base.for_replicate(1), 0));
        assert_ne!(x, draw(base.with_lane(1), 0));
        assert_ne!(x, draw(base, 1));
        assert_ne!(x, draw(StreamKey::new(8), 0));
    }
}
