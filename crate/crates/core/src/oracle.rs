//! Exact reference implementations used to check the sketches.

use alloc::vec::Vec;

use crate::sample::UNBOUNDED;
use crate::types::{Query, Record};

/// Append-only copy of the whole stream.
#[derive(Debug, Clone, Default)]
pub struct RecordStore {
    records: Vec<Record>,
}

impl RecordStore {
    pub fn new() -> Self {
        RecordStore::default()
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Number of stored records satisfying every predicate of `query`.
    pub fn exact_count(&self, query: &Query) -> u64 {
        self.records.iter().filter(|r| query.matches(r)).count() as u64
    }
}

impl FromIterator<Record> for RecordStore {
    fn from_iter<I: IntoIterator<Item = Record>>(iter: I) -> Self {
        RecordStore {
            records: iter.into_iter().collect(),
        }
    }
}

impl Extend<Record> for RecordStore {
    fn extend<I: IntoIterator<Item = Record>>(&mut self, iter: I) {
        self.records.extend(iter);
    }
}

/// Expected cell state after a sequence of offers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KminReference {
    pub count: u64,
    pub sample: Vec<u64>,
    pub threshold: u64,
}

/// Sorts the offers, removes duplicates and keeps the `capacity` smallest.
pub fn kmin_oracle(offers: &[u64], capacity: usize) -> KminReference {
    let mut sample = offers.to_vec();
    sample.sort_unstable();
    sample.dedup();
    sample.truncate(capacity);
    let threshold = if sample.len() == capacity {
        *sample.last().unwrap_or(&UNBOUNDED)
    } else {
        UNBOUNDED
    };
    KminReference {
        count: offers.len() as u64,
        sample,
        threshold,
    }
}
