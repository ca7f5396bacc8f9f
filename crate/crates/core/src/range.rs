//! Dyadic ranges.
//!
//! A range-enabled attribute with domain `[1, 2^bits]` keeps one grid per
//! level `k = 0..bits`. Level `k` indexes the dyadic range
//! `[x * 2^k + 1, (x + 1) * 2^k]` by its key `x`, so a value `v` lands on key
//! `(v - 1) >> k`. A range predicate is split into its canonical cover and,
//! per row, the cells of the cover's pieces are merged into one sample.

use alloc::vec::Vec;

use crate::error::Error;
use crate::intersect::SortedSample;
use crate::sample::{Cell, UNBOUNDED};
use crate::types::AttributeValue;

/// Dyadic range `[key * 2^level + 1, (key + 1) * 2^level]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicPiece {
    pub level: u32,
    pub key: u64,
}

impl DyadicPiece {
    pub fn lo(&self) -> u64 {
        (self.key << self.level) + 1
    }

    pub fn hi(&self) -> u64 {
        (self.key + 1) << self.level
    }
}

/// Key of the level-`level` dyadic range holding `value`.
#[inline]
pub fn dyadic_key(value: AttributeValue, level: u32) -> u64 {
    (value - 1) >> level
}

/// Disjoint dyadic pieces whose union is exactly the covered range, in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCover {
    pub pieces: Vec<DyadicPiece>,
}

impl CanonicalCover {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// Minimal dyadic decomposition of `[lo, hi]` within `[1, 2^domain_bits]`.
/// Has at most `2 * domain_bits` pieces, or one piece at level
/// `domain_bits` for the whole domain.
pub fn canonical_cover(lo: u64, hi: u64, domain_bits: u32) -> Result<CanonicalCover, Error> {
    if domain_bits == 0 || domain_bits > 62 {
        return Err(Error::InvalidParameter("domain bits must lie in 1..=62"));
    }
    if lo == 0 || lo > hi || hi > 1u64 << domain_bits {
        return Err(Error::OutOfDomain {
            attribute: 0,
            lo,
            hi,
        });
    }
    let mut pieces = Vec::new();
    // zero-based half-open [start, end)
    let mut start = lo - 1;
    let end = hi;
    while start < end {
        let mut level = if start == 0 {
            domain_bits
        } else {
            start.trailing_zeros().min(domain_bits)
        };
        while 1u64 << level > end - start {
            level -= 1;
        }
        pieces.push(DyadicPiece {
            level,
            key: start >> level,
        });
        start += 1 << level;
    }
    Ok(CanonicalCover { pieces })
}

/// Union of several disjoint cells viewed as one sample.
///
/// The threshold is the smallest component threshold and only fingerprints
/// strictly below it are kept, so the result is a valid bottom-k style
/// sample of the union of the components' records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedCell {
    count: u64,
    threshold: u64,
    sample: Vec<u64>,
}

impl MergedCell {
    /// Merges `cells`; the same cell passed twice (two pieces hashed to one
    /// column) is only counted once.
    pub fn merge<'a, I>(cells: I) -> Self
    where
        I: IntoIterator<Item = &'a Cell>,
    {
        let mut distinct: Vec<&Cell> = Vec::new();
        for c in cells {
            if !distinct.iter().any(|d| core::ptr::eq(*d, c)) {
                distinct.push(c);
            }
        }
        let threshold = distinct
            .iter()
            .map(|c| c.threshold())
            .min()
            .unwrap_or(UNBOUNDED);
        let count = distinct.iter().map(|c| c.count()).sum();
        let mut sample: Vec<u64> = distinct
            .iter()
            .flat_map(|c| c.iter().take_while(|&fp| fp < threshold))
            .collect();
        sample.sort_unstable();
        sample.dedup();
        MergedCell {
            count,
            threshold,
            sample,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.sample.iter().copied()
    }
}

impl SortedSample for MergedCell {
    fn sample_len(&self) -> usize {
        self.sample.len()
    }

    fn seek(&self, from: u64) -> Option<u64> {
        self.sample.as_slice().seek(from)
    }
}
