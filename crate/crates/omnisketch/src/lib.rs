//! File formats, workloads and the command-line front end for
//! [`omnisketch_core`].
//!
//! - [`schema`]: TOML attribute schemas and categorical dictionaries.
//! - [`records`]: CSV record streams.
//! - [`query`]: the query string grammar.
//! - [`snapshot`]: the binary snapshot format.
//! - [`workload`]: synthetic streams, query workloads, benchmarks.
//! - [`cli`]: the `omnisketch` command.

pub mod cli;
pub mod error;
pub mod query;
pub mod records;
pub mod schema;
pub mod snapshot;
pub mod workload;

pub use error::{exit_code, Error, Result};
pub use omnisketch_core as core;
pub use query::{format_query, parse_query};
pub use records::{read_records, write_records};
pub use schema::{AttributeConfig, AttributeKind, Dictionaries, SchemaConfig};
pub use snapshot::Snapshot;
pub use workload::{
    generate_queries, generate_stream, run_benchmark, BenchConfig, BenchmarkReport, Distribution,
    EstimatorKind, EstimatorSpec, QueryWorkload, StreamSpec, WorkloadSpec,
};
