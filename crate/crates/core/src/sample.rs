//! Bounded K-minwise cell samples.
//!
//! A [`Cell`] counts every record hashed into it and keeps the `B` smallest
//! distinct rid fingerprints seen so far in an ordered set, plus the current
//! admission threshold `s_max`.

use alloc::collections::BTreeSet;
use core::cmp::Ordering;

use crate::error::Error;
use crate::intersect::SortedSample;

/// Threshold of a cell whose sample is not yet full. Strictly above every
/// fingerprint because fingerprints are at most 63 bits wide.
pub const UNBOUNDED: u64 = u64::MAX;

/// Fingerprint comparison counter used by work-scaling checks. Without the
/// `probe-counter` feature every function is a no-op returning zero.
pub mod probe {
    #[cfg(feature = "probe-counter")]
    static COMPARISONS: core::sync::atomic::AtomicU64 = core::sync::atomic::AtomicU64::new(0);

    #[inline(always)]
    pub(crate) fn tick() {
        #[cfg(feature = "probe-counter")]
        COMPARISONS.fetch_add(1, core::sync::atomic::Ordering::Relaxed);
    }

    /// Comparisons performed since the last [`reset`].
    pub fn count() -> u64 {
        #[cfg(feature = "probe-counter")]
        {
            COMPARISONS.load(core::sync::atomic::Ordering::Relaxed)
        }
        #[cfg(not(feature = "probe-counter"))]
        {
            0
        }
    }

    pub fn reset() {
        #[cfg(feature = "probe-counter")]
        COMPARISONS.store(0, core::sync::atomic::Ordering::Relaxed);
    }

    pub fn enabled() -> bool {
        cfg!(feature = "probe-counter")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fp(u64);

impl PartialOrd for Fp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fp {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        probe::tick();
        self.0.cmp(&other.0)
    }
}

/// One sketch cell: arrival counter, bounded fingerprint sample and the
/// sample's maximum once it is full.
///
/// The cell does not store its capacity; the owning grid passes it to
/// [`Cell::insert`] and every cell of a sketch uses the same value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    count: u64,
    sample: BTreeSet<Fp>,
    s_max: u64,
}

impl Default for Cell {
    fn default() -> Self {
        Cell::new()
    }
}

impl Cell {
    pub fn new() -> Self {
        Cell {
            count: 0,
            sample: BTreeSet::new(),
            s_max: UNBOUNDED,
        }
    }

    /// Rebuilds a cell from its serialized parts. `fingerprints` must be
    /// strictly increasing, hold at most `capacity` values and never more
    /// than `count`.
    pub fn from_parts<I>(count: u64, fingerprints: I, capacity: usize) -> Result<Self, Error>
    where
        I: IntoIterator<Item = u64>,
    {
        let mut sample = BTreeSet::new();
        let mut prev = None;
        for fp in fingerprints {
            if fp == UNBOUNDED || prev.is_some_and(|p| p >= fp) {
                return Err(Error::CorruptState(
                    "cell sample is not strictly increasing",
                ));
            }
            prev = Some(fp);
            sample.insert(Fp(fp));
        }
        if sample.len() > capacity || sample.len() as u64 > count {
            return Err(Error::CorruptState(
                "cell sample larger than capacity or count",
            ));
        }
        let s_max = match sample.last() {
            Some(&Fp(m)) if sample.len() == capacity => m,
            _ => UNBOUNDED,
        };
        Ok(Cell {
            count,
            sample,
            s_max,
        })
    }

    /// Offers one fingerprint: the counter always advances; the sample keeps
    /// the `capacity` smallest distinct fingerprints.
    pub fn insert(&mut self, fp: u64, capacity: usize) {
        debug_assert!(capacity >= 1 && fp != UNBOUNDED);
        self.count += 1;
        if self.sample.len() < capacity {
            if self.sample.insert(Fp(fp)) && self.sample.len() == capacity {
                self.s_max = self.max_fingerprint();
            }
            return;
        }
        probe::tick();
        if fp < self.s_max && self.sample.insert(Fp(fp)) {
            self.sample.pop_last();
            self.s_max = self.max_fingerprint();
        }
    }

    fn max_fingerprint(&self) -> u64 {
        self.sample.last().map_or(UNBOUNDED, |fp| fp.0)
    }

    /// Number of records hashed into this cell.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// `s_max` once the sample is full, otherwise [`UNBOUNDED`].
    pub fn threshold(&self) -> u64 {
        self.s_max
    }

    pub fn is_saturated(&self) -> bool {
        self.s_max != UNBOUNDED
    }

    /// Sample in ascending order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u64> + ExactSizeIterator + '_ {
        self.sample.iter().map(|fp| fp.0)
    }

    /// Smallest sampled fingerprint `>= fp`.
    pub fn seek(&self, fp: u64) -> Option<u64> {
        self.sample.range(Fp(fp)..).next().map(|f| f.0)
    }
}

impl SortedSample for Cell {
    fn sample_len(&self) -> usize {
        self.len()
    }

    fn seek(&self, from: u64) -> Option<u64> {
        Cell::seek(self, from)
    }
}
