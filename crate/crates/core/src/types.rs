//! Records, predicates, queries and estimates shared by every sketch.

use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;

/// Attribute values are integers; categorical inputs are dictionary-encoded
/// before they reach a sketch.
pub type AttributeValue = u64;

/// Unique identifier of a stream arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordId(pub u64);

/// One stream element: a record id plus one value per searchable attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub rid: RecordId,
    pub values: Vec<AttributeValue>,
}

impl Record {
    pub fn new(rid: RecordId, values: Vec<AttributeValue>) -> Self {
        Record { rid, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredicateKind {
    Equals(AttributeValue),
    /// Inclusive on both ends.
    Range {
        lo: AttributeValue,
        hi: AttributeValue,
    },
}

/// A predicate on a single attribute. `attribute` is a zero-based index;
/// the textual query format names it `a{attribute + 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub attribute: usize,
    pub kind: PredicateKind,
}

impl Predicate {
    pub fn equals(attribute: usize, value: AttributeValue) -> Self {
        Predicate {
            attribute,
            kind: PredicateKind::Equals(value),
        }
    }

    pub fn range(attribute: usize, lo: AttributeValue, hi: AttributeValue) -> Self {
        Predicate {
            attribute,
            kind: PredicateKind::Range { lo, hi },
        }
    }

    pub fn matches(&self, record: &Record) -> bool {
        let v = record.values[self.attribute];
        match self.kind {
            PredicateKind::Equals(x) => v == x,
            PredicateKind::Range { lo, hi } => lo <= v && v <= hi,
        }
    }

    pub fn is_range(&self) -> bool {
        matches!(self.kind, PredicateKind::Range { .. })
    }
}

/// A conjunction of predicates. Construction does not validate; see
/// [`validate_query`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    predicates: Vec<Predicate>,
}

impl Query {
    pub fn new(predicates: Vec<Predicate>) -> Self {
        Query { predicates }
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    /// Number of predicates.
    pub fn p(&self) -> usize {
        self.predicates.len()
    }

    pub fn has_range(&self) -> bool {
        self.predicates.iter().any(Predicate::is_range)
    }

    pub fn matches(&self, record: &Record) -> bool {
        self.predicates.iter().all(|p| p.matches(record))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PredicateKind::Equals(v) => write!(f, "a{}={}", self.attribute + 1, v),
            PredicateKind::Range { lo, hi } => {
                write!(f, "a{} IN [{},{}]", self.attribute + 1, lo, hi)
            }
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Attribute layout of a stream: one entry per attribute holding the
/// range-enabled domain width in bits, or `None` for attributes that only
/// support equality predicates.
///
/// A range-enabled attribute with `bits = k` takes values in `[1, 2^k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    domain_bits: Vec<Option<u32>>,
}

impl Schema {
    pub const MAX_DOMAIN_BITS: u32 = 32;

    pub fn new(domain_bits: Vec<Option<u32>>) -> Result<Self, Error> {
        if domain_bits.is_empty() {
            return Err(Error::InvalidParameter(
                "schema needs at least one attribute",
            ));
        }
        if domain_bits
            .iter()
            .flatten()
            .any(|&b| b == 0 || b > Self::MAX_DOMAIN_BITS)
        {
            return Err(Error::InvalidParameter("domain bits must lie in 1..=32"));
        }
        Ok(Schema { domain_bits })
    }

    /// `attributes` equality-only attributes.
    pub fn categorical(attributes: usize) -> Self {
        Schema {
            domain_bits: alloc::vec![None; attributes.max(1)],
        }
    }

    /// Converts a power-of-two domain size into its bit count.
    pub fn bits_for_domain(size: u64) -> Result<u32, Error> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::DomainNotPowerOfTwo(size));
        }
        Ok(size.trailing_zeros())
    }

    pub fn attribute_count(&self) -> usize {
        self.domain_bits.len()
    }

    pub fn domain_bits(&self, attribute: usize) -> Option<u32> {
        self.domain_bits.get(attribute).copied().flatten()
    }

    pub fn is_range_enabled(&self, attribute: usize) -> bool {
        self.domain_bits(attribute).is_some()
    }

    /// Number of grids kept for an attribute: one per dyadic level for
    /// range-enabled attributes, otherwise one.
    pub fn levels(&self, attribute: usize) -> usize {
        self.domain_bits(attribute).map_or(1, |b| b as usize)
    }

    /// Total number of attribute grids across the schema.
    pub fn grid_count(&self) -> usize {
        (0..self.attribute_count()).map(|a| self.levels(a)).sum()
    }

    pub fn in_domain(&self, attribute: usize, value: AttributeValue) -> bool {
        match self.domain_bits(attribute) {
            Some(bits) => value >= 1 && value <= 1u64 << bits,
            None => true,
        }
    }

    pub fn check_record(&self, record: &Record) -> Result<(), Error> {
        if record.values.len() != self.attribute_count() {
            return Err(Error::SchemaMismatch {
                expected: self.attribute_count(),
                found: record.values.len(),
            });
        }
        for (a, &v) in record.values.iter().enumerate() {
            if !self.in_domain(a, v) {
                return Err(Error::OutOfDomain {
                    attribute: a,
                    lo: v,
                    hi: v,
                });
            }
        }
        Ok(())
    }
}

/// Checks a query against a schema: non-empty, known and distinct attributes,
/// ranges with `lo <= hi` inside the declared domain, and range predicates
/// only on range-enabled attributes.
pub fn validate_query(query: &Query, schema: &Schema) -> Result<(), Error> {
    if query.predicates.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut seen = alloc::vec![false; schema.attribute_count()];
    for p in &query.predicates {
        let a = p.attribute;
        if a >= schema.attribute_count() {
            return Err(Error::UnknownAttribute(a));
        }
        if core::mem::replace(&mut seen[a], true) {
            return Err(Error::DuplicateAttribute(a));
        }
        let (lo, hi) = match p.kind {
            PredicateKind::Equals(v) => (v, v),
            PredicateKind::Range { lo, hi } => {
                if lo > hi {
                    return Err(Error::OutOfDomain {
                        attribute: a,
                        lo,
                        hi,
                    });
                }
                if !schema.is_range_enabled(a) {
                    return Err(Error::RangeNotEnabled(a));
                }
                (lo, hi)
            }
        };
        if !schema.in_domain(a, lo) || !schema.in_domain(a, hi) {
            return Err(Error::OutOfDomain {
                attribute: a,
                lo,
                hi,
            });
        }
    }
    Ok(())
}

/// Result of a count estimate.
///
/// `value` is the primary estimate. `below_sanity` reports whether the
/// sample intersection is smaller than the sanity threshold; in that case
/// the true count is bounded by `2 * fallback_value` with high probability
/// rather than by the `epsilon * N` guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub intersection_size: u64,
    pub n_max: u64,
    pub below_sanity: bool,
    pub sanity_threshold: f64,
    pub fallback_value: f64,
}

impl Estimate {
    /// An estimate computed without sampling (the rid-list sketch and
    /// vacuous queries).
    pub fn exact(count: u64, n_max: u64) -> Self {
        Estimate {
            value: count as f64,
            intersection_size: count,
            n_max,
            below_sanity: false,
            sanity_threshold: 0.0,
            fallback_value: count as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn schema4() -> Schema {
        Schema::new(vec![None, Some(4), None, None]).unwrap()
    }

    #[test]
    fn minimal_query_is_valid() {
        let q = Query::new(vec![Predicate::equals(0, 5)]);
        assert_eq!(validate_query(&q, &schema4()), Ok(()));
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let q = Query::new(vec![Predicate::equals(0, 5), Predicate::equals(0, 7)]);
        assert_eq!(
            validate_query(&q, &schema4()),
            Err(Error::DuplicateAttribute(0))
        );
    }

    #[test]
    fn inverted_range_rejected() {
        let q = Query::new(vec![Predicate::range(1, 9, 3)]);
        assert!(matches!(
            validate_query(&q, &schema4()),
            Err(Error::OutOfDomain { attribute: 1, .. })
        ));
    }

    #[test]
    fn empty_query_rejected() {
        assert_eq!(
            validate_query(&Query::new(vec![]), &schema4()),
            Err(Error::EmptyQuery)
        );
    }

    #[test]
    fn range_checks_domain_and_capability() {
        let s = schema4();
        let q = Query::new(vec![Predicate::range(1, 1, 17)]);
        assert!(matches!(
            validate_query(&q, &s),
            Err(Error::OutOfDomain { .. })
        ));
        let q = Query::new(vec![Predicate::range(1, 0, 3)]);
        assert!(matches!(
            validate_query(&q, &s),
            Err(Error::OutOfDomain { .. })
        ));
        let q = Query::new(vec![Predicate::range(2, 1, 3)]);
        assert_eq!(validate_query(&q, &s), Err(Error::RangeNotEnabled(2)));
        let q = Query::new(vec![Predicate::equals(9, 1)]);
        assert_eq!(validate_query(&q, &s), Err(Error::UnknownAttribute(9)));
    }

    #[test]
    fn display_uses_one_based_names() {
        let q = Query::new(vec![Predicate::equals(2, 17), Predicate::range(0, 4, 99)]);
        assert_eq!(q.to_string(), "a3=17 AND a1 IN [4,99]");
    }

    #[test]
    fn domain_sizes() {
        assert_eq!(Schema::bits_for_domain(16), Ok(4));
        assert_eq!(
            Schema::bits_for_domain(12),
            Err(Error::DomainNotPowerOfTwo(12))
        );
        assert_eq!(schema4().grid_count(), 7);
    }
}
