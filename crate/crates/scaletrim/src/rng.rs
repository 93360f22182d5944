//! Deterministic operand sampling for the sampled sweep mode.
//!
//! Sampled sweeps must be reproducible across releases, platforms, and
//! worker counts, so the exact stream derivation is part of the tool's
//! contract and is stamped into every report as [`RNG_ALGORITHM`]. Changing
//! any step below (generator, seeding, masking, draw order) requires a new
//! algorithm id.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifier for the sampling scheme: ChaCha12 seeded via `seed_from_u64`,
/// one `next_u64` per operand masked down to the operand width, `a` drawn
/// before `b` for each pair.
pub const RNG_ALGORITHM: &str = "chacha12/seed_from_u64/mask-v1";

/// Infinite stream of seeded operand pairs in `[0, 2^width)`.
pub struct PairSampler {
    rng: ChaCha12Rng,
    mask: u64,
}

impl PairSampler {
    pub fn new(seed: u64, width: u32) -> Self {
        debug_assert!((1..=63).contains(&width));
        PairSampler {
            rng: ChaCha12Rng::seed_from_u64(seed),
            mask: (1u64 << width) - 1,
        }
    }

    #[inline]
    pub fn next_pair(&mut self) -> (u64, u64) {
        let a = self.rng.next_u64() & self.mask;
        let b = self.rng.next_u64() & self.mask;
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut s1 = PairSampler::new(42, 8);
        let mut s2 = PairSampler::new(42, 8);
        for _ in 0..1000 {
            assert_eq!(s1.next_pair(), s2.next_pair());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let mut s1 = PairSampler::new(42, 16);
        let mut s2 = PairSampler::new(43, 16);
        let same = (0..100)
            .filter(|_| s1.next_pair() == s2.next_pair())
            .count();
        assert!(
            same < 3,
            "streams should be effectively independent, {same} collisions"
        );
    }

    #[test]
    fn values_respect_width_mask() {
        let mut s = PairSampler::new(7, 8);
        let mut seen_high = false;
        for _ in 0..1000 {
            let (a, b) = s.next_pair();
            assert!(a < 256 && b < 256);
            seen_high |= a >= 128 || b >= 128;
        }
        assert!(seen_high, "top operand bit never drawn");
    }

    #[test]
    fn stream_is_frozen() {
        // First three pairs for seed 42 at width 8; a change here means the
        // published algorithm id no longer describes the implementation.
        let mut s = PairSampler::new(42, 8);
        let first: Vec<(u64, u64)> = (0..3).map(|_| s.next_pair()).collect();
        let mut again = PairSampler::new(42, 8);
        assert_eq!(first, (0..3).map(|_| again.next_pair()).collect::<Vec<_>>());
        let mut raw = ChaCha12Rng::seed_from_u64(42);
        let direct: Vec<(u64, u64)> = (0..3)
            .map(|_| (raw.next_u64() & 0xFF, raw.next_u64() & 0xFF))
            .collect();
        assert_eq!(
            first, direct,
            "sampler must be exactly mask(next_u64) pairs"
        );
    }
}
