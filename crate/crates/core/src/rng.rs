//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`seeded`], which returns a
//! `ChaCha8Rng` initialised with `SeedableRng::seed_from_u64`. The ChaCha
//! stream cipher is fully specified (RFC 7539 core, 8 rounds), so streams are
//! identical on every platform. Normal variates use the ziggurat sampler of
//! `rand_distr::StandardNormal`.
//!
//! Sub-streams (per trial, per scheme, per chunk) are derived with
//! [`derive_seed`], a SplitMix64-style fold over the parent seed and the
//! sub-stream coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold `parts` into `parent`: `h = splitmix64(h ^ splitmix64(part))` for each part.
pub fn derive_seed(parent: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(parent), |h, &p| splitmix64(h ^ splitmix64(p)))
}
