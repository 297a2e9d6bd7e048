//! Seeded random number generation shared by sampling, LDA and synthesis.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in run metadata so a result can be tied to the
/// generator that produced it.
pub const RNG_ALGORITHM: &str = "chacha8";

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a stream index into a base seed (splitmix64 finaliser) so that
/// independent consumers of one run seed draw uncorrelated streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
