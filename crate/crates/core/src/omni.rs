//! The sampled multi-attribute sketch.
//!
//! Every attribute owns one `w x d` grid of [`Cell`]s (one grid per dyadic
//! level for range-enabled attributes). A record is offered to one cell per
//! row of every grid, using its rid fingerprint `g(rid)`. A query selects one
//! cell per predicate and row, intersects their samples and scales the
//! intersection size by `n_max / B`, where `n_max` is the largest counter
//! among the selected cells.

use alloc::vec::Vec;

use crate::error::Error;
use crate::hashing::{rid_seed, row_seed, RidHasher, RowHash};
use crate::intersect::{multiway_intersect, SortedSample};
use crate::params::{SketchParams, COUNTER_BITS, ENTRY_OVERHEAD_BITS};
use crate::range::{canonical_cover, dyadic_key, MergedCell};
use crate::sample::Cell;
use crate::types::{
    validate_query, AttributeValue, Estimate, PredicateKind, Query, Record, Schema,
};

#[derive(Debug, Clone)]
pub struct OmniSketch {
    params: SketchParams,
    schema: Schema,
    // first grid of each attribute; grids are laid out attribute by attribute,
    // level 0 first
    grid_offsets: Vec<usize>,
    // [grid][row]
    hashes: Vec<RowHash>,
    // [grid][row][column]
    cells: Vec<Cell>,
    fingerprint: RidHasher,
    len: u64,
}

/// Sanity-bound quantities for a query touching `p` predicates.
///
/// `log_term = log2(4 p d sqrt(B) / delta)`. Below `sample_threshold`
/// sampled intersection elements the scaled estimate loses its
/// `epsilon * N` guarantee; `fallback` is the value returned in that case by
/// the two-case estimator. `scaled_threshold` and `scaled_error` are the
/// equivalent quantities when the scaled estimator is always used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SanityBounds {
    pub log_term: f64,
    pub sample_threshold: f64,
    pub fallback: f64,
    pub scaled_threshold: f64,
    pub scaled_error: f64,
}

pub fn sanity_bounds(params: &SketchParams, p: usize, n_max: u64) -> SanityBounds {
    let b = params.sample_size as f64;
    let eps2 = params.epsilon * params.epsilon;
    let log_term = libm::log2(4.0 * p as f64 * params.depth as f64 * libm::sqrt(b) / params.delta);
    let scaled = n_max as f64 * log_term / (b * eps2);
    SanityBounds {
        log_term,
        sample_threshold: 3.0 * log_term / eps2,
        fallback: 2.0 * scaled,
        scaled_threshold: 3.0 * scaled,
        scaled_error: 4.0 * scaled,
    }
}

enum View<'a> {
    Cell(&'a Cell),
    Merged(MergedCell),
}

impl View<'_> {
    fn count(&self) -> u64 {
        match self {
            View::Cell(c) => c.count(),
            View::Merged(m) => m.count(),
        }
    }
}

impl SortedSample for View<'_> {
    fn sample_len(&self) -> usize {
        match self {
            View::Cell(c) => c.len(),
            View::Merged(m) => m.len(),
        }
    }

    fn seek(&self, from: u64) -> Option<u64> {
        match self {
            View::Cell(c) => c.seek(from),
            View::Merged(m) => m.seek(from),
        }
    }
}

impl OmniSketch {
    pub fn new(params: SketchParams, schema: Schema) -> Result<Self, Error> {
        let cells = alloc::vec![Cell::new(); schema.grid_count() * params.depth * params.width];
        Self::assemble(params, schema, cells, 0)
    }

    /// Rebuilds a sketch from stored state. `cells` must be in the order of
    /// [`OmniSketch::cells`] and satisfy the cell invariants for capacity `B`.
    pub fn from_parts(
        params: SketchParams,
        schema: Schema,
        cells: Vec<Cell>,
        len: u64,
    ) -> Result<Self, Error> {
        if cells.len() != schema.grid_count() * params.depth * params.width {
            return Err(Error::CorruptState(
                "cell count does not match the sketch shape",
            ));
        }
        if cells
            .iter()
            .any(|c| c.len() > params.sample_size || c.count() > len)
        {
            return Err(Error::CorruptState(
                "cell exceeds capacity or stream length",
            ));
        }
        Self::assemble(params, schema, cells, len)
    }

    fn assemble(
        params: SketchParams,
        schema: Schema,
        cells: Vec<Cell>,
        len: u64,
    ) -> Result<Self, Error> {
        params.validate()?;
        if params.grid_count != schema.grid_count() {
            return Err(Error::SchemaMismatch {
                expected: params.grid_count,
                found: schema.grid_count(),
            });
        }
        let width = u32::try_from(params.width).map_err(|_| Error::InvalidWidth)?;
        let mut grid_offsets = Vec::with_capacity(schema.attribute_count());
        let mut hashes = Vec::with_capacity(params.grid_count * params.depth);
        for a in 0..schema.attribute_count() {
            grid_offsets.push(hashes.len() / params.depth);
            for level in 0..schema.levels(a) {
                for row in 0..params.depth {
                    hashes.push(RowHash::new(row_seed(params.seed, a, level, row), width)?);
                }
            }
        }
        let fingerprint = RidHasher::new(rid_seed(params.seed), params.fingerprint_bits)?;
        Ok(OmniSketch {
            params,
            schema,
            grid_offsets,
            hashes,
            cells,
            fingerprint,
            len,
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Stream length `N`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fingerprinter(&self) -> &RidHasher {
        &self.fingerprint
    }

    /// All cells, grid by grid, row by row.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn key(&self, attribute: usize, level: usize, value: AttributeValue) -> u64 {
        if self.schema.is_range_enabled(attribute) {
            dyadic_key(value, level as u32)
        } else {
            value
        }
    }

    fn slot(&self, attribute: usize, level: usize, row: usize, key: u64) -> usize {
        let grid_row = (self.grid_offsets[attribute] + level) * self.params.depth + row;
        grid_row * self.params.width + self.hashes[grid_row].index(key)
    }

    /// The cell a value maps to in `row` of the level-`level` grid of
    /// `attribute`.
    pub fn cell_for(
        &self,
        attribute: usize,
        level: usize,
        row: usize,
        value: AttributeValue,
    ) -> &Cell {
        &self.cells[self.slot(attribute, level, row, self.key(attribute, level, value))]
    }

    pub fn insert(&mut self, record: &Record) -> Result<(), Error> {
        self.schema.check_record(record)?;
        let fp = self.fingerprint.fingerprint(record.rid);
        let capacity = self.params.sample_size;
        for (a, &v) in record.values.iter().enumerate() {
            for level in 0..self.schema.levels(a) {
                let key = self.key(a, level, v);
                for row in 0..self.params.depth {
                    let slot = self.slot(a, level, row, key);
                    self.cells[slot].insert(fp, capacity);
                }
            }
        }
        self.len += 1;
        Ok(())
    }

    /// Estimates the number of records matching `query`. Equality
    /// predicates read the point grid; range predicates merge, per row, the
    /// cells of their canonical cover. A range covering the whole domain
    /// constrains nothing and is dropped; a query made only of such ranges
    /// returns the stream length.
    pub fn estimate(&self, query: &Query) -> Result<Estimate, Error> {
        validate_query(query, &self.schema)?;
        let depth = self.params.depth;
        let mut views = Vec::with_capacity(query.p() * depth);
        let mut p = 0;
        for pred in query.predicates() {
            let a = pred.attribute;
            match pred.kind {
                PredicateKind::Equals(v) => {
                    let key = self.key(a, 0, v);
                    views.extend(
                        (0..depth).map(|row| View::Cell(&self.cells[self.slot(a, 0, row, key)])),
                    );
                }
                PredicateKind::Range { lo, hi } => {
                    let bits = self
                        .schema
                        .domain_bits(a)
                        .ok_or(Error::RangeNotEnabled(a))?;
                    let cover = canonical_cover(lo, hi, bits).map_err(|e| match e {
                        Error::OutOfDomain { lo, hi, .. } => Error::OutOfDomain {
                            attribute: a,
                            lo,
                            hi,
                        },
                        other => other,
                    })?;
                    match cover.pieces.as_slice() {
                        [whole] if whole.level == bits => continue,
                        [piece] => views.extend((0..depth).map(|row| {
                            View::Cell(
                                &self.cells[self.slot(a, piece.level as usize, row, piece.key)],
                            )
                        })),
                        pieces => views.extend((0..depth).map(|row| {
                            View::Merged(MergedCell::merge(pieces.iter().map(|pc| {
                                &self.cells[self.slot(a, pc.level as usize, row, pc.key)]
                            })))
                        })),
                    }
                }
            }
            p += 1;
        }
        if views.is_empty() {
            return Ok(Estimate::exact(self.len, self.len));
        }
        Ok(self.estimate_views(&views, p))
    }

    fn estimate_views(&self, views: &[View<'_>], p: usize) -> Estimate {
        let n_max = views.iter().map(View::count).max().unwrap_or(0);
        let common = multiway_intersect(views).len() as u64;
        // n_max / B for full samples; exact when nothing was sampled away
        let scale = views
            .iter()
            .filter(|v| v.sample_len() > 0)
            .map(|v| v.count() as f64 / v.sample_len() as f64)
            .fold(0.0, f64::max);
        let value = if common == 0 {
            0.0
        } else {
            scale * common as f64
        };
        let bounds = sanity_bounds(&self.params, p, n_max);
        Estimate {
            value,
            intersection_size: common,
            n_max,
            below_sanity: (common as f64) < bounds.sample_threshold,
            sanity_threshold: bounds.sample_threshold,
            fallback_value: bounds.fallback,
        }
    }

    /// Current footprint under the budget formula: a counter per cell plus
    /// `b + 97` bits per stored fingerprint.
    pub fn accounted_bits(&self) -> u128 {
        let per_entry = (self.params.fingerprint_bits as u64 + ENTRY_OVERHEAD_BITS) as u128;
        self.cells
            .iter()
            .map(|c| COUNTER_BITS as u128 + c.len() as u128 * per_entry)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{kmin_oracle, RecordStore};
    use crate::s0::S0Sketch;
    use crate::types::{Predicate, RecordId};
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sketch(attributes: usize, sample_size: usize, seed: u64) -> OmniSketch {
        let params = SketchParams::with_sample_size(0.1, 0.1, sample_size, attributes)
            .unwrap()
            .with_seed(seed);
        OmniSketch::new(params, Schema::categorical(attributes)).unwrap()
    }

    fn random_records(n: u64, attributes: usize, domain: u64, seed: u64) -> Vec<Record> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                Record::new(
                    RecordId(i),
                    (0..attributes)
                        .map(|_| rng.random_range(1..=domain))
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn one_record_touches_attributes_times_depth_cells() {
        let mut s = sketch(3, 8, 1);
        s.insert(&Record::new(RecordId(0), vec![1, 2, 3])).unwrap();
        let touched: Vec<&Cell> = s.cells().iter().filter(|c| c.count() > 0).collect();
        assert_eq!(touched.len(), 3 * s.params().depth);
        assert!(touched.iter().all(|c| c.count() == 1 && c.len() == 1));
    }

    #[test]
    fn counters_conserve_stream_length() {
        let mut s = sketch(2, 16, 2);
        for r in random_records(1000, 2, 50, 3) {
            s.insert(&r).unwrap();
        }
        let per_grid = s.params().depth * s.params().width;
        for grid in s.cells().chunks(per_grid) {
            let total: u64 = grid.iter().map(Cell::count).sum();
            assert_eq!(total, 1000 * s.params().depth as u64);
        }
    }

    #[test]
    fn cells_hold_bottom_b_of_their_rids() {
        let mut s = sketch(2, 32, 5);
        let records = random_records(10_000, 2, 20, 6);
        let mut offered: BTreeMap<*const Cell, Vec<u64>> = BTreeMap::new();
        for r in &records {
            s.insert(r).unwrap();
        }
        let g = *s.fingerprinter();
        for r in &records {
            for (a, &v) in r.values.iter().enumerate() {
                for row in 0..s.params().depth {
                    let c: *const Cell = s.cell_for(a, 0, row, v);
                    offered.entry(c).or_default().push(g.fingerprint(r.rid));
                }
            }
        }
        for (ptr, fps) in offered {
            let cell = s.cells().iter().find(|c| core::ptr::eq(*c, ptr)).unwrap();
            let reference = kmin_oracle(&fps, 32);
            assert_eq!(cell.count(), reference.count);
            assert_eq!(cell.iter().collect::<Vec<_>>(), reference.sample);
        }
    }

    #[test]
    fn direct_formula() {
        // n_max = 1000, B = 100, |S∩| = 7 -> 70
        let mut cells: Vec<Cell> = (0..2).map(|_| Cell::new()).collect();
        for (i, c) in cells.iter_mut().enumerate() {
            for fp in 0..1000u64 {
                let fp = if fp < 7 { fp } else { fp * 2 + i as u64 + 100 };
                c.insert(fp, 100);
            }
        }
        let s = sketch(1, 100, 0);
        let views: Vec<View> = cells.iter().map(View::Cell).collect();
        let est = s.estimate_views(&views, 1);
        assert_eq!(est.intersection_size, 7);
        assert_eq!(est.n_max, 1000);
        assert_eq!(est.value, 70.0);
    }

    #[test]
    fn empty_intersection_is_zero_and_below_sanity() {
        let mut s = sketch(2, 64, 9);
        s.insert(&Record::new(RecordId(0), vec![1, 1])).unwrap();
        let q = Query::new(vec![Predicate::equals(0, 1), Predicate::equals(1, 2)]);
        let est = s.estimate(&q).unwrap();
        if est.intersection_size == 0 {
            assert_eq!(est.value, 0.0);
            assert!(est.below_sanity);
        }
        let empty = sketch(2, 64, 9);
        let est = empty.estimate(&q).unwrap();
        assert_eq!((est.value, est.below_sanity), (0.0, true));
    }

    #[test]
    fn unsampled_regime_matches_rid_lists() {
        let mut s = sketch(3, 4096, 21);
        let p = *s.params();
        let mut s0 = S0Sketch::with_dimensions(3, p.width, p.depth, p.seed).unwrap();
        let records = random_records(3000, 3, 6, 22);
        for r in &records {
            s.insert(r).unwrap();
            s0.insert(r).unwrap();
        }
        assert!(s.cells().iter().all(|c| c.count() <= 4096));
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let q = Query::new(vec![
                Predicate::equals(0, rng.random_range(1..=6)),
                Predicate::equals(2, rng.random_range(1..=6)),
            ]);
            assert_eq!(
                s.estimate(&q).unwrap().value,
                s0.estimate_cap(&q).unwrap().value
            );
        }
    }

    #[test]
    fn sanity_bound_formulas() {
        let params = SketchParams::with_sample_size(0.1, 0.1, 100, 1).unwrap();
        let b = sanity_bounds(&params, 2, 1000);
        let log_term = libm::log2(4.0 * 2.0 * 3.0 * 10.0 / 0.1);
        assert!((b.log_term - log_term).abs() < 1e-12);
        assert!((b.sample_threshold - 3.0 * log_term / 0.01).abs() < 1e-9);
        assert!((b.fallback - 2.0 * 1000.0 * log_term / (100.0 * 0.01)).abs() < 1e-9);
        assert!((b.scaled_threshold - 1.5 * b.fallback).abs() < 1e-9);
    }

    #[test]
    fn rejects_mismatched_records_and_grids() {
        let mut s = sketch(2, 8, 0);
        assert!(matches!(
            s.insert(&Record::new(RecordId(0), vec![1, 2, 3])),
            Err(Error::SchemaMismatch { .. })
        ));
        let params = SketchParams::with_sample_size(0.1, 0.1, 8, 2).unwrap();
        let schema = Schema::new(vec![Some(4), None]).unwrap();
        assert!(matches!(
            OmniSketch::new(params, schema),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn from_parts_round_trip() {
        let mut s = sketch(2, 16, 4);
        let store: RecordStore = random_records(500, 2, 10, 4).into_iter().collect();
        for r in store.records() {
            s.insert(r).unwrap();
        }
        let cells: Vec<Cell> = s
            .cells()
            .iter()
            .map(|c| Cell::from_parts(c.count(), c.iter(), 16).unwrap())
            .collect();
        let t = OmniSketch::from_parts(*s.params(), s.schema().clone(), cells, s.len()).unwrap();
        let q = Query::new(vec![Predicate::equals(0, 3), Predicate::equals(1, 4)]);
        assert_eq!(s.estimate(&q), t.estimate(&q));
        assert!(OmniSketch::from_parts(*s.params(), s.schema().clone(), vec![], 0).is_err());
    }

    #[test]
    fn accounted_bits_stay_within_budget() {
        let params = crate::params::configure(0.1, 0.1, 8 * 64 * 1024, 2)
            .unwrap()
            .with_seed(3);
        let mut s = OmniSketch::new(params, Schema::categorical(2)).unwrap();
        for r in random_records(50_000, 2, 4, 8) {
            s.insert(&r).unwrap();
        }
        assert!(s.accounted_bits() <= params.memory_bits as u128);
    }
}
