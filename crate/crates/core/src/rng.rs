//! Seed derivation and deterministic random streams.
//!
//! Every random quantity in the pipeline (circuit draws, measurement shots,
//! split shuffles, bootstrap resamples) comes from its own xoshiro256**
//! stream. Stream seeds are derived from a base seed and a stream index with
//! a splitmix64-style mix, so generation order never matters: sample `i`
//! gets the same data whether it is produced serially or in parallel.

use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

/// Derives a new 64-bit seed from a base seed and a stream index.
///
/// Uses the splitmix64 finalizer over `base + index * golden_gamma`, which
/// decorrelates consecutive indices while staying trivially portable.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Opens the deterministic random stream for a seed.
pub fn stream(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}
