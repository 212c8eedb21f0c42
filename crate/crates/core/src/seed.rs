//! Platform-stable derivation of RNG streams from a master seed.
//!
//! Every random draw in the toolkit comes from a ChaCha stream seeded via
//! [`derive`], so runs reproduce bit-for-bit regardless of evaluation
//! order or platform.

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of seed components.
pub fn derive(parts: &[u64]) -> u64 {
    let mut h = 0x0DDB_1A5E_5BAD_5EEDu64;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}
