//! Deterministic RNG derivation.
//!
//! Every random decision in the crate flows from a single master seed through
//! (domain, index) pairs, so replaying a stream with the same seed reproduces
//! every sample and every tree bit for bit, and changing how many draws one
//! consumer makes never perturbs another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_TREES: u64 = 1;
pub(crate) const DOMAIN_SAMPLING: u64 = 2;
pub(crate) const DOMAIN_SYNTH: u64 = 3;

/// SplitMix64 finalizer; decorrelates nearby seeds before they reach ChaCha.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// An independent generator for draw `index` within `domain`, derived from the
/// master seed. Distinct (domain, index) pairs select distinct ChaCha streams.
pub(crate) fn derive_rng(master: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master ^ mix(domain)));
    rng.set_stream(index);
    rng
}
