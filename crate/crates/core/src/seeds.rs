//! Deterministic seed derivation.
//!
//! Every randomized operation in the crate takes one explicit master seed and
//! derives per-item sub-seeds from it, so that item `i` of a run depends only
//! on `(master_seed, domain, i)` — never on how many items precede it, the
//! thread count, or iteration order. That gives two properties the rest of the
//! crate relies on:
//!
//! - **prefix stability**: generating `n` items and then `m > n` items with
//!   the same master seed yields the first `n` items unchanged;
//! - **domain separation**: two subsystems (e.g. profile sampling and fixture
//!   generation) sharing one master seed still draw independent streams.
//!
//! Derivation is the splitmix64 finalizer over `master ⊕ mix(domain)` plus a
//! golden-ratio stride per index. The derived value seeds a ChaCha12 stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Identity-profile sampling (`attrs`).
pub const DOMAIN_PROFILE: u64 = 0x5052_4f46_494c_4531;
/// Synthetic cluster fixtures (`synthetic`), per-identity stream.
pub const DOMAIN_SYNTH_IDENTITY: u64 = 0x5359_4e54_4849_4431;
/// Synthetic cluster fixtures, per-group anchor stream.
pub const DOMAIN_SYNTH_ANCHOR: u64 = 0x5359_4e54_414e_4331;
/// Impostor selection in the mated/non-mated protocol (`evaluation`).
pub const DOMAIN_EVAL_IMPOSTOR: u64 = 0x4556_414c_494d_5031;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: a fast, well-mixed bijection on `u64`.
#[inline]
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the sub-seed for item `index` of `domain` under `master`.
#[inline]
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    let base = master ^ splitmix64_mix(domain);
    splitmix64_mix(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// ChaCha12 stream for item `index` of `domain` under `master`.
pub fn rng_for(master: u64, domain: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, domain, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable() {
        // Frozen values: any change to the derivation scheme breaks every
        // seeded artifact downstream, so it must be deliberate.
        assert_eq!(derive_seed(0, DOMAIN_PROFILE, 0), 0x9674_695a_b546_d68c);
        assert_eq!(derive_seed(42, DOMAIN_PROFILE, 7), 0x85a4_bc6a_5a16_be85);
    }

    #[test]
    fn indices_do_not_collide_locally() {
        let mut seen = std::collections::HashSet::new();
        for domain in [DOMAIN_PROFILE, DOMAIN_SYNTH_IDENTITY, DOMAIN_EVAL_IMPOSTOR] {
            for index in 0..10_000 {
                assert!(seen.insert(derive_seed(12345, domain, index)));
            }
        }
    }

    #[test]
    fn rng_streams_differ_per_index() {
        let a: u64 = rng_for(1, DOMAIN_PROFILE, 0).random();
        let b: u64 = rng_for(1, DOMAIN_PROFILE, 1).random();
        assert_ne!(a, b);
    }
}
