//! Seedable hash families.
//!
//! Row hashes map attribute values to columns with the pairwise-independent
//! family `((a*x + b) mod p) mod w` over the Mersenne prime `p = 2^61 - 1`.
//! The rid fingerprint `g` is a keyed 64-bit finalizer truncated to `b` bits.
//!
//! Every hash in a sketch is derived from a single master seed through
//! [`row_seed`] and [`rid_seed`], so two sketches built with the same seed and
//! dimensions place every value in the same cells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::types::{AttributeValue, RecordId};

pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Largest fingerprint width. `u64::MAX` is reserved as the "+inf" sample
/// threshold and must stay above every fingerprint.
pub const MAX_FINGERPRINT_BITS: u32 = 63;

#[inline]
fn reduce(x: u128) -> u64 {
    let p = MERSENNE_61 as u128;
    let r = (x & p) + (x >> 61);
    let r = (r & p) + (r >> 61);
    let r = r as u64;
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

/// SplitMix64 finalizer: a bijection on `u64` with full avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the hash of `row` in the grid at dyadic `level` of `attribute`.
/// Level 0 is the point grid used for equality predicates.
pub fn row_seed(master: u64, attribute: usize, level: usize, row: usize) -> u64 {
    let mut h = mix64(master ^ 0x6a09_e667_f3bc_c908);
    for part in [attribute as u64, level as u64, row as u64] {
        h = mix64(h ^ part.wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    h
}

pub fn rid_seed(master: u64) -> u64 {
    mix64(master ^ 0xbb67_ae85_84ca_a73b)
}

/// One pairwise-independent function from attribute values to `1..=w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowHash {
    a: u64,
    b: u64,
    width: u32,
}

impl RowHash {
    pub fn new(seed: u64, width: u32) -> Result<Self, Error> {
        if width == 0 {
            return Err(Error::InvalidWidth);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(1..MERSENNE_61);
        let b = rng.random_range(0..MERSENNE_61);
        Ok(RowHash { a, b, width })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Column in `1..=w`.
    #[inline]
    pub fn column(&self, value: AttributeValue) -> u32 {
        self.index(value) as u32 + 1
    }

    /// Zero-based column, `column(v) - 1`.
    #[inline]
    pub fn index(&self, value: AttributeValue) -> usize {
        // Values are first reduced into the field; inputs that differ by a
        // multiple of p collide, which dictionary-encoded and dyadic keys
        // never do in practice.
        let x = reduce(value as u128);
        let y = reduce(self.a as u128 * x as u128 + self.b as u128);
        (y % self.width as u64) as usize
    }
}

/// The global rid fingerprint function `g`, with outputs in `[0, 2^b - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RidHasher {
    key: u64,
    bits: u32,
}

impl RidHasher {
    pub fn new(seed: u64, bits: u32) -> Result<Self, Error> {
        if bits == 0 || bits > MAX_FINGERPRINT_BITS {
            return Err(Error::InvalidFingerprintBits(bits));
        }
        Ok(RidHasher {
            key: mix64(seed),
            bits,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Largest possible fingerprint, `2^b - 1`.
    pub fn max_fingerprint(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    #[inline]
    pub fn fingerprint(&self, rid: RecordId) -> u64 {
        mix64(rid.0 ^ self.key) >> (64 - self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn row_hash_is_deterministic() {
        let h1 = RowHash::new(42, 8).unwrap();
        let h2 = RowHash::new(42, 8).unwrap();
        assert_eq!(h1.column(17), h1.column(17));
        assert_eq!(h1.column(17), h2.column(17));
        assert!((1..=8).contains(&h1.column(17)));
    }

    #[test]
    fn width_one_maps_everything_to_column_one() {
        let h = RowHash::new(42, 1).unwrap();
        for v in [0, 1, 17, u64::MAX, MERSENNE_61] {
            assert_eq!(h.column(v), 1);
        }
    }

    #[test]
    fn zero_width_rejected() {
        assert_eq!(RowHash::new(1, 0), Err(Error::InvalidWidth));
    }

    #[test]
    fn mersenne_reduction_matches_modulo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x: u128 = rng.random::<u128>() >> 6;
            assert_eq!(reduce(x) as u128, x % MERSENNE_61 as u128);
        }
        assert_eq!(reduce(MERSENNE_61 as u128), 0);
        assert_eq!(reduce(u64::MAX as u128), (u64::MAX % MERSENNE_61));
    }

    // 3-sigma binomial tolerance around the ideal 1/w collision rate.
    fn within_three_sigma(hits: u64, trials: u64, w: u32) -> bool {
        let p = 1.0 / w as f64;
        let mean = trials as f64 * p;
        let sigma = libm::sqrt(trials as f64 * p * (1.0 - p));
        (hits as f64 - mean).abs() <= 3.0 * sigma
    }

    #[test]
    fn random_pair_collision_rate() {
        let w = 29;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 1_000_000u64;
        let mut hits = 0;
        let mut seed = 0u64;
        let mut h = RowHash::new(seed, w).unwrap();
        for i in 0..trials {
            if i % 16 == 0 {
                seed += 1;
                h = RowHash::new(seed, w).unwrap();
            }
            let x: u32 = rng.random();
            let mut y: u32 = rng.random();
            while y == x {
                y = rng.random();
            }
            hits += (h.column(x as u64) == h.column(y as u64)) as u64;
        }
        assert!(within_three_sigma(hits, trials, w), "hits = {hits}");
    }

    #[test]
    fn fixed_pair_collision_rate_over_seeds() {
        let w = 29;
        for (x, y) in [(1u64, 2u64), (17, 1 << 40), (5, 5 + 29)] {
            let trials = 100_000u64;
            let hits = (0..trials)
                .filter(|&s| {
                    let h = RowHash::new(s.wrapping_mul(0x9e37_79b9), w).unwrap();
                    h.column(x) == h.column(y)
                })
                .count() as u64;
            assert!(
                within_three_sigma(hits, trials, w),
                "pair ({x},{y}) hits = {hits}"
            );
        }
    }

    #[test]
    fn columns_pass_chi_square() {
        let w = 29usize;
        let h = RowHash::new(20240607, w as u32).unwrap();
        let n = 100_000u64;
        let mut counts = [0u64; 29];
        for v in 1..=n {
            counts[h.index(v)] += 1;
        }
        let expected = n as f64 / w as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p_value = 1.0 - ChiSquared::new((w - 1) as f64).unwrap().cdf(stat);
        assert!(p_value > 0.001, "chi2 = {stat}, p = {p_value}");
    }

    #[test]
    fn fingerprint_range_and_determinism() {
        let g = RidHasher::new(9, 1).unwrap();
        for r in 0..1000 {
            assert!(g.fingerprint(RecordId(r)) <= 1);
        }
        let g = RidHasher::new(9, 31).unwrap();
        assert_eq!(g.fingerprint(RecordId(77)), g.fingerprint(RecordId(77)));
        assert!(g.fingerprint(RecordId(77)) <= g.max_fingerprint());
        assert_eq!(
            RidHasher::new(9, 64),
            Err(Error::InvalidFingerprintBits(64))
        );
        assert_eq!(RidHasher::new(9, 0), Err(Error::InvalidFingerprintBits(0)));
    }

    #[test]
    fn sequential_rid_collisions_follow_birthday_bound() {
        let n = 1_000_000u64;
        let g = RidHasher::new(1234, 31).unwrap();
        let mut fps: Vec<u64> = (0..n).map(|r| g.fingerprint(RecordId(r))).collect();
        fps.sort_unstable();
        let duplicates = fps.windows(2).filter(|w| w[0] == w[1]).count() as f64;
        // Expected colliding pairs n^2 / (2 * 2^31); Poisson spread.
        let expected = (n as f64) * (n as f64) / (2.0 * (1u64 << 31) as f64);
        assert!(
            duplicates <= expected + 5.0 * libm::sqrt(expected),
            "{duplicates} duplicates, expected about {expected}"
        );
    }
}
