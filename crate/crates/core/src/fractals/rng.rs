//! Counter-based random numbers.
//!
//! A draw is a pure function of `(seed, key)`, where the key names the object
//! being randomized (for percolation: the child cube's level and coordinates).
//! Generation order and thread count therefore never change the output.
//!
//! The mixer is the SplitMix64 finalizer applied to the seed and then folded
//! over the key words. This choice is frozen: changing it changes every
//! seeded test set.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// 64 pseudo-random bits for `key`.
    pub fn bits(&self, key: &[u64]) -> u64 {
        let mut h = mix(self.seed.wrapping_add(GOLDEN));
        for (i, &k) in key.iter().enumerate() {
            h = mix(h ^ mix(k.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 2))));
        }
        h
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&self, key: &[u64]) -> f64 {
        (self.bits(key) >> 11) as f64 * (-53.0f64).exp2()
    }
}
