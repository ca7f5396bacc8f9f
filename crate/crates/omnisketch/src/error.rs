use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sketch(#[from] omnisketch_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("cannot parse query: {0}")]
    QueryParse(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid snapshot: {0}")]
    Snapshot(String),

    #[error("estimator does not match the stream: {0}")]
    EstimatorSchemaMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes by error class.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    /// Malformed input: CSV rows, query strings, command-line usage.
    pub const PARSE: i32 = 2;
    /// Parameters that cannot produce a sketch: budget, epsilon, schema.
    pub const CONFIG: i32 = 3;
    /// I/O failures and corrupt snapshots.
    pub const RUNTIME: i32 = 4;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        use omnisketch_core::Error as Core;
        match self {
            Error::Parse { .. } | Error::QueryParse(_) | Error::UnknownAttribute(_) => {
                exit_code::PARSE
            }
            Error::Sketch(
                Core::EmptyQuery
                | Core::UnknownAttribute(_)
                | Core::DuplicateAttribute(_)
                | Core::OutOfDomain { .. }
                | Core::RangeNotEnabled(_)
                | Core::RangePredicateUnsupported,
            ) => exit_code::PARSE,
            Error::Sketch(Core::CorruptState(_)) => exit_code::RUNTIME,
            Error::Sketch(Core::SchemaMismatch { .. }) => exit_code::PARSE,
            Error::Sketch(_)
            | Error::Schema(_)
            | Error::Config(_)
            | Error::EstimatorSchemaMismatch(_) => exit_code::CONFIG,
            Error::Io(_) | Error::Snapshot(_) => exit_code::RUNTIME,
        }
    }
}
