//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream. Child seeds
//! are derived from a master seed and a path of integer tags with a
//! SplitMix64 finalizer, so the stream for run `k` does not depend on how many
//! other runs exist or in which order they execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` along `path`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &tag| {
            splitmix64(acc.rotate_left(23) ^ splitmix64(tag))
        })
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tags for the sub-streams of a single simulation run.
pub mod tag {
    pub const INSTANCE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const POLICY: u64 = 3;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_path_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_ne!(derive_seed(0, &[]), derive_seed(0, &[0]));
    }

    #[test]
    fn streams_replay() {
        let a: Vec<u64> = stream(42).random_iter().take(16).collect();
        let b: Vec<u64> = stream(42).random_iter().take(16).collect();
        assert_eq!(a, b);
    }
}
