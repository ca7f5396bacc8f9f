//! Command-line interface.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use omnisketch_core::params::configure_grids;
use omnisketch_core::{OmniSketch, Record, SketchParams};
use serde_json::json;

use crate::error::{Error, Result};
use crate::query::parse_query;
use crate::records::read_records;
use crate::schema::{Dictionaries, SchemaConfig};
use crate::snapshot::Snapshot;
use crate::workload::{
    generate_queries, generate_stream, parse_estimators, parse_memory, run_benchmark, BenchConfig,
    StreamSpec, WorkloadSpec,
};

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "OMNI_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "omnisketch",
    version,
    about = "Approximate multi-predicate COUNT queries over record streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the sketch shape that fits a memory budget.
    Configure(ConfigureArgs),
    /// Build a sketch from a CSV stream and write a snapshot.
    Ingest(IngestArgs),
    /// Estimate a query against a snapshot.
    Query(QueryArgs),
    /// Describe a snapshot.
    Snapshot(SnapshotArgs),
    /// Compare estimators on a synthetic or CSV stream.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Memory budget: bytes, or a number with a KB/MB/GB suffix.
    #[arg(long)]
    pub memory: Option<String>,
    /// Number of numeric equality attributes `a1..ak`, when no schema is given.
    #[arg(long, conflicts_with = "schema")]
    pub attrs: Option<usize>,
    /// TOML schema file.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Master seed (overridden by OMNI_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ConfigureArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV file with header `rid,a1,...,ak` (rid optional).
    pub input: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Sample size B per cell, instead of solving for a memory budget.
    #[arg(long, conflicts_with = "memory")]
    pub sample_size: Option<usize>,
    /// Snapshot file to write.
    #[arg(long, visible_alias = "snapshot")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// For example `a3=17 AND a1 IN [4,99]`.
    pub query: String,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Synthetic stream, e.g. `n=100000,attrs=4,dist=zipf:1.1,domain=1000,seed=7`.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub stream_spec: Option<String>,
    /// CSV stream instead of a synthetic one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Number of attributes of the CSV stream, when no schema is given.
    #[arg(long, conflicts_with = "schema")]
    pub attrs: Option<usize>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated: s0min, s0cap, s1, s1@<memory>.
    #[arg(long, default_value = "s0min,s0cap,s1")]
    pub estimators: String,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Budget for `s1` without an explicit size.
    #[arg(long, default_value = "4MB")]
    pub memory: String,
    /// Master seed of the sketches and the workload (overridden by OMNI_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of records used as query templates.
    #[arg(long, default_value_t = 0.0005)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 2)]
    pub p_min: usize,
    /// Defaults to the attribute count.
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub per_record: usize,
    /// Skip exact counting; the report has no error columns.
    #[arg(long)]
    pub no_oracle: bool,
    /// Skip latency and ingestion timing so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timings: bool,
    /// Per-query report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-estimator summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// `OMNI_SEED` if set, else `flag`, else `fallback`.
pub fn resolve_seed(flag: Option<u64>, fallback: Option<u64>) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(flag.or(fallback).unwrap_or(0)),
    }
}

fn load_schema(schema: Option<&Path>, attrs: Option<usize>) -> Result<SchemaConfig> {
    match (schema, attrs) {
        (Some(path), _) => SchemaConfig::load(path),
        (None, Some(0)) => Err(Error::Config("--attrs must be at least 1".into())),
        (None, Some(k)) => Ok(SchemaConfig::numeric(k)),
        (None, None) => Err(Error::Config(
            "either --schema or --attrs is required".into(),
        )),
    }
}

fn solve(shape: &ShapeArgs, schema: &SchemaConfig) -> Result<SketchParams> {
    let memory = shape
        .memory
        .as_deref()
        .ok_or_else(|| Error::Config("--memory is required".into()))?;
    let grids = schema.sketch_schema().grid_count();
    let seed = resolve_seed(shape.seed, schema.seed)?;
    Ok(configure_grids(shape.epsilon, shape.delta, parse_memory(memory)?, grids)?.with_seed(seed))
}

fn params_json(p: &SketchParams) -> serde_json::Value {
    json!({
        "epsilon": p.epsilon,
        "delta": p.delta,
        "memory_bits": p.memory_bits,
        "grid_count": p.grid_count,
        "width": p.width,
        "depth": p.depth,
        "sample_size": p.sample_size,
        "fingerprint_bits": p.fingerprint_bits,
        "epsilon1": p.epsilon1,
        "epsilon2": p.epsilon2,
        "delta1": p.delta1,
        "delta2": p.delta2,
        "seed": p.seed,
        "required_bits": p.required_bits().to_string(),
    })
}

fn write_params(out: &mut dyn Write, p: &SketchParams) -> Result<()> {
    writeln!(out, "epsilon={} delta={}", p.epsilon, p.delta)?;
    writeln!(
        out,
        "w={} d={} B={} b={}",
        p.width, p.depth, p.sample_size, p.fingerprint_bits
    )?;
    writeln!(out, "grids={} seed={}", p.grid_count, p.seed)?;
    writeln!(
        out,
        "epsilon1={} epsilon2={:.6} delta1={} delta2={}",
        p.epsilon1, p.epsilon2, p.delta1, p.delta2
    )?;
    writeln!(
        out,
        "memory_bits={} required_bits={}",
        p.memory_bits,
        p.required_bits()
    )?;
    Ok(())
}

fn configure(args: &ConfigureArgs, out: &mut dyn Write) -> Result<()> {
    let schema = load_schema(args.shape.schema.as_deref(), args.shape.attrs)?;
    let params = solve(&args.shape, &schema)?;
    if args.json {
        writeln!(out, "{}", params_json(&params))?;
    } else {
        write_params(out, &params)?;
    }
    Ok(())
}

fn ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let mut schema = load_schema(args.shape.schema.as_deref(), args.shape.attrs)?;
    let core_schema = schema.sketch_schema();
    let params = match args.sample_size {
        Some(b) => SketchParams::with_sample_size(
            args.shape.epsilon,
            args.shape.delta,
            b,
            core_schema.grid_count(),
        )?
        .with_seed(resolve_seed(args.shape.seed, schema.seed)?),
        None => solve(&args.shape, &schema)?,
    };
    schema.seed = Some(params.seed);
    let mut sketch = OmniSketch::new(params, core_schema)?;
    let mut dicts = Dictionaries::new(schema.attribute_count());
    let start = Instant::now();
    let n = read_records(
        BufReader::new(File::open(&args.input)?),
        &schema,
        &mut dicts,
        |r: Record| Ok(sketch.insert(&r)?),
    )?;
    let secs = start.elapsed().as_secs_f64();
    let snap = Snapshot {
        sketch,
        schema,
        dictionaries: dicts,
    };
    snap.save(&args.out)?;
    let rate = if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    };
    writeln!(
        out,
        "ingested {n} records in {secs:.3} s ({rate:.0} records/s)"
    )?;
    writeln!(
        out,
        "wrote {} (w={} d={} B={})",
        args.out.display(),
        params.width,
        params.depth,
        params.sample_size
    )?;
    Ok(())
}

fn query(args: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let snap = Snapshot::load(&args.snapshot)?;
    let q = parse_query(&args.query, &snap.schema, &snap.dictionaries)?;
    let est = snap.sketch.estimate(&q)?;
    if args.json {
        let v = json!({
            "query": args.query,
            "value": est.value,
            "intersection_size": est.intersection_size,
            "n_max": est.n_max,
            "below_sanity": est.below_sanity,
            "sanity_threshold": est.sanity_threshold,
            "fallback_value": est.fallback_value,
        });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "value={}", est.value)?;
        writeln!(out, "intersection_size={}", est.intersection_size)?;
        writeln!(out, "n_max={}", est.n_max)?;
        writeln!(out, "below_sanity={}", est.below_sanity)?;
        writeln!(out, "sanity_threshold={}", est.sanity_threshold)?;
        writeln!(out, "fallback_value={}", est.fallback_value)?;
    }
    Ok(())
}

fn snapshot(args: &SnapshotArgs, out: &mut dyn Write) -> Result<()> {
    let snap = Snapshot::load(&args.snapshot)?;
    let s = &snap.sketch;
    let saturated = s.cells().iter().filter(|c| c.is_saturated()).count();
    if args.json {
        let attrs: Vec<_> = snap
            .schema
            .attributes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                json!({
                    "name": a.name,
                    "kind": format!("{:?}", a.kind).to_lowercase(),
                    "domain_bits": a.domain_bits,
                    "range": a.range,
                    "dictionary_size": snap.dictionaries.values(i).len(),
                })
            })
            .collect();
        let v = json!({
            "params": params_json(s.params()),
            "attributes": attrs,
            "records": s.len(),
            "cells": s.cells().len(),
            "saturated_cells": saturated,
            "accounted_bits": s.accounted_bits().to_string(),
        });
        writeln!(out, "{v}")?;
        return Ok(());
    }
    write_params(out, s.params())?;
    for (i, a) in snap.schema.attributes.iter().enumerate() {
        let index = format!("a{}", i + 1);
        if a.name == index {
            write!(out, "{index} {:?}", a.kind)?;
        } else {
            write!(out, "{index} {} {:?}", a.name, a.kind)?;
        }
        if a.range {
            write!(out, " range domain_bits={}", a.domain_bits.unwrap_or(0))?;
        }
        let dict = snap.dictionaries.values(i).len();
        if dict > 0 {
            write!(out, " dictionary={dict}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "records={}", s.len())?;
    writeln!(out, "cells={} saturated={saturated}", s.cells().len())?;
    writeln!(out, "accounted_bits={}", s.accounted_bits())?;
    Ok(())
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let seed = resolve_seed(args.seed, None)?;
    let (records, attributes) = match (&args.stream_spec, &args.input) {
        (Some(spec), _) => {
            let spec: StreamSpec = spec.parse()?;
            (generate_stream(&spec)?, spec.attribute_count())
        }
        (None, Some(path)) => {
            let schema = load_schema(args.schema.as_deref(), args.attrs)?;
            let mut dicts = Dictionaries::new(schema.attribute_count());
            let mut records = Vec::new();
            read_records(
                BufReader::new(File::open(path)?),
                &schema,
                &mut dicts,
                |r| {
                    records.push(r);
                    Ok(())
                },
            )?;
            (records, schema.attribute_count())
        }
        (None, None) => {
            return Err(Error::Config(
                "either --stream-spec or --input is required".into(),
            ))
        }
    };
    let estimators = parse_estimators(&args.estimators)?;
    let workload = generate_queries(
        &records,
        &WorkloadSpec {
            sample_rate: args.sample_rate,
            p_min: args.p_min,
            p_max: args.p_max.unwrap_or(attributes),
            per_record_per_p: args.per_record,
            seed,
        },
    );
    let config = BenchConfig {
        epsilon: args.epsilon,
        delta: args.delta,
        memory_bits: parse_memory(&args.memory)?,
        seed,
        oracle: !args.no_oracle,
        timings: !args.no_timings,
    };
    let report = run_benchmark(&records, attributes, &workload, &estimators, &config)?;
    if let Some(path) = &args.out {
        report.write_csv(BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &args.summary {
        report.write_summary_csv(BufWriter::new(File::create(path)?))?;
    }
    write!(out, "{report}")?;
    Ok(())
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Configure(a) => configure(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::Query(a) => query(a, out),
        Command::Snapshot(a) => snapshot(a, out),
        Command::Bench(a) => bench(a, out),
    }
}
