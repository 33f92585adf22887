//! Seeded, splittable random streams.
//!
//! Every stochastic operation takes an explicit generator. Generators are
//! ChaCha12 instances keyed by a `u64` seed, with the ChaCha stream id used
//! to separate purposes (latent draws, edges, weight init, ...). Two streams
//! of the same seed never overlap, so a replicate's graph does not change when
//! another consumer draws more or fewer numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SpecRng = ChaCha12Rng;

/// Purpose tags for stream splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Latent = 1,
    Graph = 2,
    WeightInit = 3,
    Noise = 4,
    Fixture = 5,
    Oracle = 6,
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: Stream) -> SpecRng {
    indexed_rng(seed, stream, 0)
}

/// Generator for `(seed, stream, index)`; `index` separates repeated uses of
/// one purpose, e.g. several weight initialisations for the same replicate.
pub fn indexed_rng(seed: u64, stream: Stream, index: u32) -> SpecRng {
    let mut rng = SpecRng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | u64::from(index));
    rng
}

/// SplitMix64 finaliser, used to derive child seeds from a parent seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
