//! Deterministic derivation of sub-seeds from a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; mixes a master seed with a stream tag.
pub fn derive(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Stream tags for the pipeline stages.
pub const KMEANS: u64 = 1;
pub const SELECT: u64 = 2;
pub const FOLDS: u64 = 3;
pub const GBDT: u64 = 4;
pub const SVM: u64 = 5;
pub const GRID: u64 = 6;
pub const HOLDOUT: u64 = 7;
pub const CHOOSE_K: u64 = 8;
