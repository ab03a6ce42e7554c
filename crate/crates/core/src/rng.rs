//! Seed derivation and deterministic random streams.
//!
//! Every random decision in the pipeline draws from a stream whose 64-bit
//! seed is derived by hashing a parent seed with a label or index. The hash
//! chain is fixed integer arithmetic, so a `(seed, "terrain")` pair names the
//! same stream on every platform and in every run. Streams themselves are
//! ChaCha8, which is specified byte-for-byte independent of the host.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Bijective on `u64`, so distinct inputs cannot
/// collide, and a single application is enough to decorrelate sequential ids.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// FNV-1a over a byte string. Used only to fold labels into seed material.
#[inline]
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive the seed of a named substream.
pub fn substream(seed: u64, label: &str) -> u64 {
    mix64(seed ^ mix64(fnv1a(label.as_bytes())))
}

/// Derive the seed of an indexed substream (per-instance, per-branch, ...).
pub fn substream_index(seed: u64, index: u64) -> u64 {
    mix64(seed.rotate_left(17) ^ mix64(index.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// Fixed-key hash of a lattice cell. Noise gradients, Voronoi jitter, and
/// tile rotations are all keyed through this, which is what makes field
/// evaluation reproducible without carrying RNG state around.
#[inline]
pub fn hash_cell(seed: u64, ix: i64, iy: i64, iz: i64) -> u64 {
    let mut h = mix64(seed ^ 0x51_7c_c1_b7_27_22_0a_95);
    h = mix64(h ^ (ix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    h = mix64(h ^ (iy as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
    h = mix64(h ^ (iz as u64).wrapping_mul(0x1656_67b1_9e37_79f9));
    h
}

/// Map a hash to a float in `[0, 1)`. Uses the top 53 bits so the result is
/// exactly representable.
#[inline]
pub fn hash_to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Open a ChaCha8 stream for a derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
