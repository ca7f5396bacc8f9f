//! Rid-list sketch: Count-Min-shaped grids whose cells keep every record id.
//!
//! Space grows linearly with the stream, so this structure serves as the
//! exact-collision reference for the sampled sketch. Both estimators only
//! overestimate: a record matching every predicate lands in every queried
//! cell.

use alloc::vec::Vec;
use core::f64::consts::E;

use crate::error::Error;
use crate::hashing::{row_seed, RowHash};
use crate::intersect::multiway_intersect;
use crate::types::{validate_query, Estimate, PredicateKind, Query, Record, Schema};

#[derive(Debug, Clone)]
pub struct S0Sketch {
    schema: Schema,
    width: usize,
    depth: usize,
    hashes: Vec<RowHash>,
    // [attribute][row][column], each a sorted rid list
    cells: Vec<Vec<u64>>,
    len: u64,
}

/// `w = 1 + ceil(e/eps)` and `d = ceil(ln(1/delta))`.
pub fn s0_dimensions(epsilon: f64, delta: f64) -> Result<(usize, usize), Error> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidEpsilonDelta { epsilon, delta });
    }
    let width = 1 + libm::ceil(E / epsilon) as usize;
    let depth = (libm::ceil(libm::log(1.0 / delta)) as usize).max(1);
    Ok((width, depth))
}

impl S0Sketch {
    pub fn new(attributes: usize, epsilon: f64, delta: f64, seed: u64) -> Result<Self, Error> {
        let (width, depth) = s0_dimensions(epsilon, delta)?;
        Self::with_dimensions(attributes, width, depth, seed)
    }

    /// Explicit grid shape. Cells are addressed with the same seed schedule
    /// as [`crate::OmniSketch`], so both structures agree cell for cell when
    /// built with equal shape and seed.
    pub fn with_dimensions(
        attributes: usize,
        width: usize,
        depth: usize,
        seed: u64,
    ) -> Result<Self, Error> {
        if attributes == 0 || depth == 0 {
            return Err(Error::InvalidParameter(
                "attributes and depth must be positive",
            ));
        }
        let width32 = u32::try_from(width).map_err(|_| Error::InvalidWidth)?;
        let mut hashes = Vec::with_capacity(attributes * depth);
        for a in 0..attributes {
            for row in 0..depth {
                hashes.push(RowHash::new(row_seed(seed, a, 0, row), width32)?);
            }
        }
        Ok(S0Sketch {
            schema: Schema::categorical(attributes),
            width,
            depth,
            hashes,
            cells: alloc::vec![Vec::new(); attributes * depth * width],
            len: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn attribute_count(&self) -> usize {
        self.schema.attribute_count()
    }

    /// Stream length `N`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Record ids stored in column `column` (zero-based) of `row` in the grid
    /// of `attribute`.
    pub fn cell(&self, attribute: usize, row: usize, column: usize) -> &[u64] {
        &self.cells[(attribute * self.depth + row) * self.width + column]
    }

    /// Total rid entries held, `N * d * |A|`.
    pub fn stored_ids(&self) -> u64 {
        self.cells.iter().map(|c| c.len() as u64).sum()
    }

    fn slot(&self, attribute: usize, row: usize, value: u64) -> usize {
        let h = &self.hashes[attribute * self.depth + row];
        (attribute * self.depth + row) * self.width + h.index(value)
    }

    pub fn insert(&mut self, record: &Record) -> Result<(), Error> {
        self.schema.check_record(record)?;
        let rid = record.rid.0;
        for (a, &v) in record.values.iter().enumerate() {
            for row in 0..self.depth {
                let slot = self.slot(a, row, v);
                let list = &mut self.cells[slot];
                match list.last() {
                    None => list.push(rid),
                    Some(&last) if last < rid => list.push(rid),
                    Some(_) => {
                        if let Err(pos) = list.binary_search(&rid) {
                            list.insert(pos, rid);
                        }
                    }
                }
            }
        }
        self.len += 1;
        Ok(())
    }

    fn equality_values(&self, query: &Query) -> Result<Vec<(usize, u64)>, Error> {
        validate_query(query, &self.schema).map_err(|e| match e {
            Error::RangeNotEnabled(_) => Error::RangePredicateUnsupported,
            other => other,
        })?;
        query
            .predicates()
            .iter()
            .map(|p| match p.kind {
                PredicateKind::Equals(v) => Ok((p.attribute, v)),
                PredicateKind::Range { .. } => Err(Error::RangePredicateUnsupported),
            })
            .collect()
    }

    /// Per row, the size of the intersection of the queried cells; the
    /// minimum over rows.
    pub fn estimate_min(&self, query: &Query) -> Result<Estimate, Error> {
        let preds = self.equality_values(query)?;
        let mut best = u64::MAX;
        let mut n_max = 0;
        for row in 0..self.depth {
            let lists: Vec<&[u64]> = preds
                .iter()
                .map(|&(a, v)| self.cells[self.slot(a, row, v)].as_slice())
                .collect();
            n_max = lists.iter().map(|l| l.len() as u64).fold(n_max, u64::max);
            best = best.min(multiway_intersect(&lists).len() as u64);
        }
        Ok(Estimate::exact(best, n_max))
    }

    /// Size of the intersection of all `p * d` queried cells.
    pub fn estimate_cap(&self, query: &Query) -> Result<Estimate, Error> {
        let preds = self.equality_values(query)?;
        let lists: Vec<&[u64]> = (0..self.depth)
            .flat_map(|row| preds.iter().map(move |&(a, v)| (a, row, v)))
            .map(|(a, row, v)| self.cells[self.slot(a, row, v)].as_slice())
            .collect();
        let n_max = lists.iter().map(|l| l.len() as u64).max().unwrap_or(0);
        Ok(Estimate::exact(
            multiway_intersect(&lists).len() as u64,
            n_max,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::RecordStore;
    use crate::types::{Predicate, RecordId};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions_from_epsilon_delta() {
        assert_eq!(s0_dimensions(0.1, 0.1).unwrap(), (29, 3));
        let s = S0Sketch::new(2, 0.1, 0.1, 1).unwrap();
        assert_eq!((s.width(), s.depth()), (29, 3));
        assert!(matches!(
            S0Sketch::new(2, 1.0, 0.1, 1),
            Err(Error::InvalidEpsilonDelta { .. })
        ));
    }

    #[test]
    fn empty_sketch_estimates_zero() {
        let s = S0Sketch::new(3, 0.1, 0.1, 1).unwrap();
        let q = Query::new(vec![Predicate::equals(0, 1), Predicate::equals(2, 9)]);
        assert_eq!(s.estimate_min(&q).unwrap().value, 0.0);
        assert_eq!(s.estimate_cap(&q).unwrap().value, 0.0);
    }

    #[test]
    fn no_false_negative_for_single_record() {
        let mut s = S0Sketch::new(3, 0.2, 0.1, 1).unwrap();
        s.insert(&Record::new(RecordId(0), vec![4, 5, 6])).unwrap();
        let q = Query::new(vec![
            Predicate::equals(0, 4),
            Predicate::equals(1, 5),
            Predicate::equals(2, 6),
        ]);
        assert!(s.estimate_cap(&q).unwrap().value >= 1.0);
    }

    #[test]
    fn duplicate_records_grow_cells_by_two() {
        let mut s = S0Sketch::new(2, 0.2, 0.1, 1).unwrap();
        s.insert(&Record::new(RecordId(0), vec![1, 2])).unwrap();
        s.insert(&Record::new(RecordId(1), vec![1, 2])).unwrap();
        let h = &s.hashes[0];
        assert_eq!(s.cell(0, 0, h.index(1)), &[0, 1]);
    }

    #[test]
    fn rids_out_of_order_stay_sorted() {
        let mut s = S0Sketch::with_dimensions(1, 1, 1, 0).unwrap();
        for rid in [5u64, 2, 9, 2, 7] {
            s.insert(&Record::new(RecordId(rid), vec![1])).unwrap();
        }
        assert_eq!(s.cell(0, 0, 0), &[2, 5, 7, 9]);
    }

    #[test]
    fn conservation_of_list_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = S0Sketch::new(4, 0.1, 0.05, 3).unwrap();
        for i in 0..1000 {
            let values = (0..4).map(|_| rng.random_range(1..50)).collect();
            s.insert(&Record::new(RecordId(i), values)).unwrap();
        }
        for a in 0..4 {
            let mass: usize = (0..s.depth())
                .flat_map(|r| (0..s.width()).map(move |c| (r, c)))
                .map(|(r, c)| s.cell(a, r, c).len())
                .sum();
            assert_eq!(mass, s.depth() * 1000);
        }
    }

    #[test]
    fn collision_free_stream_is_exact() {
        // Two values per attribute, width 29: pick a seed whose hashes keep
        // the values apart in every row, then 7 matching records.
        let seed = (0..)
            .find(|&seed| {
                let s = S0Sketch::new(2, 0.1, 0.1, seed).unwrap();
                (0..2).all(|a| (0..s.depth()).all(|r| s.slot(a, r, 1) != s.slot(a, r, 2)))
            })
            .unwrap();
        let mut s = S0Sketch::new(2, 0.1, 0.1, seed).unwrap();
        let mut store = RecordStore::new();
        let mut rid = 0;
        for (values, copies) in [([1, 1], 7), ([1, 2], 3), ([2, 1], 4), ([2, 2], 5)] {
            for _ in 0..copies {
                let r = Record::new(RecordId(rid), values.to_vec());
                s.insert(&r).unwrap();
                store.push(r);
                rid += 1;
            }
        }
        let q = Query::new(vec![Predicate::equals(0, 1), Predicate::equals(1, 1)]);
        assert_eq!(store.exact_count(&q), 7);
        assert_eq!(s.estimate_min(&q).unwrap().value, 7.0);
        assert_eq!(s.estimate_cap(&q).unwrap().value, 7.0);
    }

    #[test]
    fn rejects_ranges_and_bad_records() {
        let mut s = S0Sketch::new(2, 0.1, 0.1, 1).unwrap();
        let q = Query::new(vec![Predicate::range(0, 1, 4)]);
        assert_eq!(s.estimate_cap(&q), Err(Error::RangePredicateUnsupported));
        assert!(matches!(
            s.insert(&Record::new(RecordId(0), vec![1])),
            Err(Error::SchemaMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn cap_is_dominated_by_min_and_never_below_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = S0Sketch::new(3, 0.25, 0.1, 4).unwrap();
        let mut store = RecordStore::new();
        for i in 0..5_000 {
            let r = Record::new(
                RecordId(i),
                (0..3).map(|_| rng.random_range(1..40)).collect(),
            );
            s.insert(&r).unwrap();
            store.push(r);
        }
        for _ in 0..200 {
            let q = Query::new(vec![
                Predicate::equals(0, rng.random_range(1..40)),
                Predicate::equals(2, rng.random_range(1..40)),
            ]);
            let f = store.exact_count(&q) as f64;
            let min = s.estimate_min(&q).unwrap().value;
            let cap = s.estimate_cap(&q).unwrap().value;
            assert!(f <= cap && cap <= min, "f={f} cap={cap} min={min}");
        }
    }
}
