//! Stable hashing for seed derivation. `std`'s hashers are randomised per
//! process, which would break run-to-run reproducibility.

pub fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// splitmix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a path of labels.
pub fn derive_seed(root: u64, parts: &[&str]) -> u64 {
    parts.iter().fold(mix(root), |acc, p| mix(acc ^ fnv1a(p.bytes().chain([0xff]))))
}
