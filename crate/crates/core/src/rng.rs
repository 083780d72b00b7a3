//! Seed derivation.
//!
//! Every random quantity in a realization is drawn from its own ChaCha8
//! stream, addressed by `(root seed, purpose, index)`. Two draws never share a
//! stream, so the result of sampling line `i` does not depend on how many
//! lines were sampled before it, on evaluation order, or on the thread that
//! did the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. The discriminant is mixed into the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    LineCount = 1,
    LineParams = 2,
    Vehicles = 3,
    EgoStreet = 4,
    Channel = 5,
    Realization = 6,
    Target = 7,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(purpose, index)` under `root`. Used to give each Monte
/// Carlo realization its own root.
pub fn derive_seed(root: u64, purpose: Purpose, index: u64) -> u64 {
    mix64(root ^ mix64((purpose as u64).wrapping_mul(0xD1B5_4A32_D192_ED03) ^ mix64(index)))
}

/// Independent generator for `(purpose, index)` under `root`.
pub fn substream(root: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(mix64((purpose as u64) << 56 ^ index));
    rng
}
