//! Deterministic seed derivation and stream splitting.
//!
//! Every replication owns an independent ChaCha8 stream whose seed is a
//! pure function of `(master_seed, tag, index)`:
//!
//! ```text
//! h   = fnv1a64(tag)
//! s   = splitmix64(master_seed ^ h)
//! out = splitmix64(s ^ splitmix64(index + 0x9E3779B97F4A7C15))
//! ```
//!
//! The function is fixed; changing it changes every recorded result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed of stream `index` under `tag`, derived from `master`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let s = splitmix64(master ^ fnv1a64(tag.as_bytes()));
    splitmix64(s ^ splitmix64(index.wrapping_add(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(master, tag, index))`.
pub fn stream(master: u64, tag: &str, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, tag, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable() {
        // Frozen values: a change here silently invalidates stored manifests.
        assert_eq!(derive_seed(0, "pack", 0), derive_seed(0, "pack", 0));
        assert_ne!(derive_seed(0, "pack", 0), derive_seed(0, "pack", 1));
        assert_ne!(derive_seed(0, "pack", 0), derive_seed(0, "sweep", 0));
        assert_ne!(derive_seed(1, "pack", 0), derive_seed(0, "pack", 0));
        assert_eq!(fnv1a64(b""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn streams_reproduce() {
        let a: Vec<u64> = stream(7, "x", 3).random_iter().take(8).collect();
        let b: Vec<u64> = stream(7, "x", 3).random_iter().take(8).collect();
        assert_eq!(a, b);
    }
}
