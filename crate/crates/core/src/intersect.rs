//! Leapfrog intersection of sorted samples.
//!
//! The smallest input proposes a candidate; the others are probed with a
//! lower-bound seek. A miss moves the candidate to the probed input's
//! successor of the failed value, so every value strictly between the two is
//! skipped in all inputs at once.

use alloc::vec::Vec;

/// Ordered set view with lower-bound search.
pub trait SortedSample {
    fn sample_len(&self) -> usize;

    /// Smallest element `>= from`.
    fn seek(&self, from: u64) -> Option<u64>;
}

impl SortedSample for [u64] {
    fn sample_len(&self) -> usize {
        self.len()
    }

    fn seek(&self, from: u64) -> Option<u64> {
        let i = self.partition_point(|&x| x < from);
        self.get(i).copied()
    }
}

impl SortedSample for Vec<u64> {
    fn sample_len(&self) -> usize {
        self.len()
    }

    fn seek(&self, from: u64) -> Option<u64> {
        self.as_slice().seek(from)
    }
}

impl<T: SortedSample + ?Sized> SortedSample for &T {
    fn sample_len(&self) -> usize {
        (**self).sample_len()
    }

    fn seek(&self, from: u64) -> Option<u64> {
        (**self).seek(from)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Intersection {
    /// Values present in every input, ascending.
    pub common: Vec<u64>,
    /// Number of seeks issued.
    pub probes: u64,
}

impl Intersection {
    pub fn len(&self) -> usize {
        self.common.len()
    }

    pub fn is_empty(&self) -> bool {
        self.common.is_empty()
    }
}

/// Exact intersection of `inputs`. Inputs are visited round-robin, starting
/// from the one with the fewest elements. No inputs yield an empty result.
pub fn multiway_intersect<S: SortedSample>(inputs: &[S]) -> Intersection {
    let mut out = Intersection::default();
    if inputs.is_empty() || inputs.iter().any(|s| s.sample_len() == 0) {
        return out;
    }
    let mut order: Vec<&S> = inputs.iter().collect();
    order.sort_by_key(|s| s.sample_len());
    let k = order.len();

    out.probes += 1;
    let Some(mut candidate) = order[0].seek(0) else {
        return out;
    };
    let mut agreeing = 1;
    let mut next = 1 % k;
    loop {
        if agreeing == k {
            out.common.push(candidate);
            let Some(after) = candidate.checked_add(1) else {
                break;
            };
            out.probes += 1;
            match order[next].seek(after) {
                Some(v) => candidate = v,
                None => break,
            }
            agreeing = 1;
        } else {
            out.probes += 1;
            match order[next].seek(candidate) {
                None => break,
                Some(v) if v == candidate => agreeing += 1,
                Some(v) => {
                    candidate = v;
                    agreeing = 1;
                }
            }
        }
        next = (next + 1) % k;
    }
    out
}
