//! Stateless seed derivation so that parallel work never depends on
//! scheduling order.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag (trial index,
/// observation counter, ...).
pub fn derive(parent: u64, tag: u64) -> u64 {
    mix(mix(parent) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}
