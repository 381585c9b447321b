//! Seed derivation and random streams.
//!
//! Every replica owns a ChaCha8 stream whose seed is derived from
//! `(base_seed, index)` with the SplitMix64 finalizer. The derivation is a
//! bijection of the 64-bit state for a fixed base, so seeds of distinct
//! replicas never collide.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `base_seed`.
///
/// `splitmix64(base + (index + 1) * gamma)`: the state map is injective in
/// `index` (gamma is odd) and the finalizer is a bijection.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Derive a sub-stream seed for a named purpose (e.g. initial sampling vs.
/// dynamics) from a replica seed.
pub fn derive_labeled(seed: u64, label: &str) -> u64 {
    let h = label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x1000_0000_01B3));
    splitmix64(seed ^ splitmix64(h))
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_distinct_for_small_ensembles() {
        for base in [0u64, 1, 42, u64::MAX] {
            let seeds: HashSet<u64> = (0..(1u64 << 20)).map(|r| derive_seed(base, r)).collect();
            assert_eq!(seeds.len(), 1 << 20);
        }
    }

    #[test]
    fn derivation_is_stable() {
        // Frozen: changing these silently would break every stored manifest.
        assert_eq!(splitmix64(0), 0);
        assert_eq!(derive_seed(0, 0), splitmix64(GOLDEN_GAMMA));
        assert_ne!(derive_labeled(7, "init"), derive_labeled(7, "dynamics"));
    }
}
