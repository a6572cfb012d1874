//! Deterministic seed derivation for independent random streams.
//!
//! All randomness in this crate flows through ChaCha8 generators seeded from
//! 64-bit values. Sub-streams (one per simulation replicate, one for data
//! generation vs. permutation, ...) derive their seeds from a master seed by
//! folding tag words through the SplitMix64 finalizer:
//!
//! ```text
//! s ← splitmix64(master)
//! for each tag: s ← splitmix64(s ⊕ (tag · 0x9E3779B97F4A7C15))
//! ```
//!
//! The rule is a pure function of `(master, tags)`, so results are identical
//! regardless of thread count or evaluation order.

/// SplitMix64 finalizer step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a sub-stream seed from a master seed and a list of tag words.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ t.wrapping_mul(0x9E3779B97F4A7C15));
    }
    s
}
