use core::fmt;

/// Errors returned by sketch construction, ingestion and query validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A row hash was requested with width zero.
    InvalidWidth,
    /// Fingerprint width outside `1..=63` bits.
    InvalidFingerprintBits(u32),
    /// `epsilon` or `delta` is outside the open interval (0, 1).
    InvalidEpsilonDelta { epsilon: f64, delta: f64 },
    /// The sampled sketch needs `epsilon < 0.25`.
    EpsilonOutOfRange(f64),
    /// The memory budget does not admit even one sample slot per cell.
    BudgetTooSmall {
        memory_bits: u64,
        required_bits: u64,
    },
    /// A structural parameter (attribute count, sample size, ...) is invalid.
    InvalidParameter(&'static str),
    /// A record's arity or a set of parameters does not match the schema.
    SchemaMismatch { expected: usize, found: usize },
    /// Range-enabled attribute domains are described by a bit count; a plain
    /// domain size must therefore be a power of two.
    DomainNotPowerOfTwo(u64),
    /// The query has no predicates.
    EmptyQuery,
    /// The query names an attribute index the schema does not have.
    UnknownAttribute(usize),
    /// Two predicates target the same attribute.
    DuplicateAttribute(usize),
    /// A value or range lies outside the attribute's declared domain, or a
    /// range has `lo > hi`.
    OutOfDomain { attribute: usize, lo: u64, hi: u64 },
    /// A range predicate targets an attribute without a dyadic ladder.
    RangeNotEnabled(usize),
    /// The estimator only answers equality predicates.
    RangePredicateUnsupported,
    /// Restored sketch state violates a structural invariant.
    CorruptState(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidWidth => write!(f, "row hash width must be at least 1"),
            Error::InvalidFingerprintBits(b) => {
                write!(f, "fingerprint width {b} is outside 1..=63 bits")
            }
            Error::InvalidEpsilonDelta { epsilon, delta } => write!(
                f,
                "epsilon ({epsilon}) and delta ({delta}) must both lie in (0, 1)"
            ),
            Error::EpsilonOutOfRange(e) => write!(f, "epsilon {e} must be below 0.25"),
            Error::BudgetTooSmall {
                memory_bits,
                required_bits,
            } => write!(
                f,
                "memory budget of {memory_bits} bits is below the {required_bits} bits needed for one sample slot per cell"
            ),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::SchemaMismatch { expected, found } => {
                write!(f, "schema mismatch: expected {expected}, found {found}")
            }
            Error::DomainNotPowerOfTwo(size) => {
                write!(f, "domain size {size} is not a power of two")
            }
            Error::EmptyQuery => write!(f, "query has no predicates"),
            Error::UnknownAttribute(a) => write!(f, "unknown attribute a{}", a + 1),
            Error::DuplicateAttribute(a) => {
                write!(f, "attribute a{} appears in more than one predicate", a + 1)
            }
            Error::OutOfDomain { attribute, lo, hi } => write!(
                f,
                "[{lo}, {hi}] is not a valid range in the domain of a{}",
                attribute + 1
            ),
            Error::RangeNotEnabled(a) => {
                write!(f, "attribute a{} does not support range predicates", a + 1)
            }
            Error::RangePredicateUnsupported => {
                write!(f, "this estimator only supports equality predicates")
            }
            Error::CorruptState(what) => write!(f, "corrupt sketch state: {what}"),
        }
    }
}

impl core::error::Error for Error {}
