//! Small-memory summaries of multi-attribute record streams that answer
//! approximate `COUNT(*)` queries over conjunctions of equality and range
//! predicates chosen at query time.
//!
//! Two structures are provided:
//!
//! - [`S0Sketch`]: one Count-Min-shaped grid per attribute whose cells keep
//!   the complete list of record ids hashed into them. Space is linear in the
//!   stream length, which makes it a useful accuracy reference. It offers the
//!   row-minimum estimator ([`S0Sketch::estimate_min`]) and the all-rows
//!   intersection estimator ([`S0Sketch::estimate_cap`]).
//! - [`OmniSketch`]: the same grid layout, but every cell keeps a counter and a
//!   bounded K-minwise sample of record-id fingerprints. Estimates scale the
//!   size of the intersection of the queried samples. Range predicates are
//!   answered through per-attribute ladders of dyadic grids.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use omnisketch_core::{configure, OmniSketch, Predicate, Query, Record, RecordId, Schema};
//!
//! let schema = Schema::categorical(2);
//! let params = configure(0.1, 0.1, 8 * 1024 * 1024, 2).unwrap().with_seed(7);
//! let mut sketch = OmniSketch::new(params, schema).unwrap();
//! for i in 0..1000u64 {
//!     sketch.insert(&Record::new(RecordId(i), vec![i % 4, i % 5])).unwrap();
//! }
//! let q = Query::new(vec![Predicate::equals(0, 1), Predicate::equals(1, 1)]);
//! let est = sketch.estimate(&q).unwrap();
//! assert!(est.value >= 50.0);
//! ```

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod hashing;
pub mod intersect;
pub mod omni;
pub mod oracle;
pub mod params;
pub mod range;
pub mod s0;
pub mod sample;
pub mod types;

pub use error::Error;
pub use hashing::{RidHasher, RowHash};
pub use intersect::{multiway_intersect, Intersection, SortedSample};
pub use omni::OmniSketch;
pub use oracle::{kmin_oracle, KminReference, RecordStore};
pub use params::{configure, configure_grids, SketchParams};
pub use range::{canonical_cover, CanonicalCover, DyadicPiece, MergedCell};
pub use s0::S0Sketch;
pub use sample::Cell;
pub use types::{
    validate_query, AttributeValue, Estimate, Predicate, PredicateKind, Query, Record, RecordId,
    Schema,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;
