//! Synthetic streams, query workloads and the benchmark loop.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use omnisketch_core::params::configure_grids;
use omnisketch_core::{
    AttributeValue, Estimate, OmniSketch, Predicate, Query, Record, RecordId, RecordStore,
    S0Sketch, Schema, SketchParams,
};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::records::csv_io;

/// Version of the per-query report layout written by
/// [`BenchmarkReport::write_csv`].
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Values `1..=domain`, value `r` drawn with probability proportional
    /// to `r^-alpha`.
    Zipf {
        alpha: f64,
        domain: u64,
    },
    Uniform {
        domain: u64,
    },
}

impl Distribution {
    pub fn domain(&self) -> u64 {
        match *self {
            Distribution::Zipf { domain, .. } | Distribution::Uniform { domain } => domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub n: u64,
    /// One distribution per attribute.
    pub distributions: Vec<Distribution>,
    pub seed: u64,
}

impl StreamSpec {
    pub fn zipf(n: u64, attributes: usize, alpha: f64, domain: u64, seed: u64) -> Self {
        StreamSpec {
            n,
            distributions: vec![Distribution::Zipf { alpha, domain }; attributes],
            seed,
        }
    }

    pub fn uniform(n: u64, attributes: usize, domain: u64, seed: u64) -> Self {
        StreamSpec {
            n,
            distributions: vec![Distribution::Uniform { domain }; attributes],
            seed,
        }
    }

    pub fn attribute_count(&self) -> usize {
        self.distributions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() {
            return Err(Error::Config(
                "stream spec needs at least one attribute".into(),
            ));
        }
        for (i, d) in self.distributions.iter().enumerate() {
            if d.domain() < 2 {
                return Err(Error::Config(format!(
                    "attribute a{} has a domain smaller than 2",
                    i + 1
                )));
            }
            if let Distribution::Zipf { alpha, .. } = d {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Config(format!(
                        "attribute a{} has Zipf exponent {alpha}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `n=100000,attrs=4,dist=zipf:1.1,domain=1000,seed=7`. `dist` is
/// `uniform` or `zipf:<alpha>`; defaults are `attrs=4`, `dist=zipf:1.1`,
/// `domain=1000` and `seed=0`.
impl FromStr for StreamSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("stream spec: {msg}"));
        let (mut n, mut attrs, mut domain, mut seed) = (None, 4usize, 1000u64, 0u64);
        let mut alpha = Some(1.1);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}` is not key=value")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| bad(format!("`{v}` is not an integer")))
            };
            match key.trim() {
                "n" => n = Some(num(value)?),
                "attrs" => attrs = num(value)? as usize,
                "domain" => domain = num(value)?,
                "seed" => seed = num(value)?,
                "dist" => {
                    alpha = match value.trim() {
                        "uniform" => None,
                        z => Some(
                            z.strip_prefix("zipf:")
                                .and_then(|a| a.parse::<f64>().ok())
                                .ok_or_else(|| bad(format!("unknown distribution `{z}`")))?,
                        ),
                    }
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let n = n.ok_or_else(|| bad("missing `n`".into()))?;
        let spec = match alpha {
            Some(alpha) => StreamSpec::zipf(n, attrs, alpha, domain, seed),
            None => StreamSpec::uniform(n, attrs, domain, seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

enum Sampler {
    Uniform(u64),
    Cdf(Vec<f64>),
}

impl Sampler {
    fn new(d: &Distribution) -> Self {
        match *d {
            Distribution::Uniform { domain } => Sampler::Uniform(domain),
            Distribution::Zipf { alpha, domain } => {
                let mut acc = 0.0;
                let cdf = (1..=domain)
                    .map(|r| {
                        acc += (r as f64).powf(-alpha);
                        acc
                    })
                    .collect();
                Sampler::Cdf(cdf)
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> AttributeValue {
        match self {
            Sampler::Uniform(domain) => rng.random_range(1..=*domain),
            Sampler::Cdf(cdf) => {
                let u = rng.random::<f64>() * cdf[cdf.len() - 1];
                (cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) + 1) as u64
            }
        }
    }
}

/// Records `0..n` with rids equal to their arrival index.
pub fn generate_stream(spec: &StreamSpec) -> Result<Vec<Record>> {
    spec.validate()?;
    let samplers: Vec<Sampler> = spec.distributions.iter().map(Sampler::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.n)
        .map(|i| {
            let values = samplers.iter().map(|s| s.draw(&mut rng)).collect();
            Record::new(RecordId(i), values)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub rid: RecordId,
    /// Zero-based attributes, ascending.
    pub attributes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryWorkload {
    pub queries: Vec<Query>,
    /// Where each query came from, index-aligned with `queries`.
    pub provenance: Vec<Provenance>,
}

impl QueryWorkload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    /// Fraction of stream records used as query templates.
    pub sample_rate: f64,
    pub p_min: usize,
    /// Capped at the attribute count.
    pub p_max: usize,
    pub per_record_per_p: usize,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            sample_rate: 0.0005,
            p_min: 2,
            p_max: usize::MAX,
            per_record_per_p: 10,
            seed: 0,
        }
    }
}

/// Equality queries built from sampled records: for each sampled record and
/// each `p`, `per_record_per_p` random attribute subsets of size `p` carrying
/// the record's values. Duplicates are dropped, first occurrence kept.
pub fn generate_queries(records: &[Record], spec: &WorkloadSpec) -> QueryWorkload {
    let mut out = QueryWorkload::default();
    let Some(first) = records.first() else {
        return out;
    };
    let k = first.values.len();
    let p_max = spec.p_max.min(k);
    let p_min = spec.p_min.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = records.len();
    let picks = ((spec.sample_rate * n as f64).round() as usize).clamp(1, n);
    let mut seen = HashSet::new();
    for i in index::sample(&mut rng, n, picks) {
        let record = &records[i];
        for p in p_min..=p_max {
            for _ in 0..spec.per_record_per_p {
                let mut attrs = index::sample(&mut rng, k, p).into_vec();
                attrs.sort_unstable();
                let query = Query::new(
                    attrs
                        .iter()
                        .map(|&a| Predicate::equals(a, record.values[a]))
                        .collect(),
                );
                if seen.insert(query.clone()) {
                    out.queries.push(query);
                    out.provenance.push(Provenance {
                        rid: record.rid,
                        attributes: attrs,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    S0Min,
    S0Cap,
    /// S1 at a memory budget in bits; `None` uses the benchmark default.
    S1 {
        memory_bits: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Column prefix in reports.
    pub label: String,
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let lower = token.to_ascii_lowercase();
        let kind = match lower.as_str() {
            "s0min" | "s0_min" => EstimatorKind::S0Min,
            "s0cap" | "s0_cap" => EstimatorKind::S0Cap,
            "s1" => EstimatorKind::S1 { memory_bits: None },
            _ => match lower.strip_prefix("s1@") {
                Some(mem) => EstimatorKind::S1 {
                    memory_bits: Some(parse_memory(mem)?),
                },
                None => return Err(Error::Config(format!("unknown estimator `{token}`"))),
            },
        };
        Ok(EstimatorSpec { kind, label: lower })
    }
}

/// Parses a comma-separated estimator list such as `s0min,s0cap,s1@4MB`.
pub fn parse_estimators(list: &str) -> Result<Vec<EstimatorSpec>> {
    let specs = list
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<EstimatorSpec>>>()?;
    if specs.is_empty() {
        return Err(Error::Config("no estimators given".into()));
    }
    let mut labels = HashSet::new();
    for s in &specs {
        if !labels.insert(&s.label) {
            return Err(Error::Config(format!(
                "estimator `{}` listed twice",
                s.label
            )));
        }
    }
    Ok(specs)
}

/// A byte count with an optional `B`, `KB`, `MB` or `GB` suffix (powers of
/// 1024), returned in bits.
pub fn parse_memory(text: &str) -> Result<u64> {
    let t = text.trim();
    let upper = t.to_ascii_uppercase();
    let (digits, scale) = [
        ("GB", 1u64 << 30),
        ("MB", 1 << 20),
        ("KB", 1 << 10),
        ("B", 1),
    ]
    .iter()
    .find_map(|&(suffix, scale)| {
        upper
            .strip_suffix(suffix)
            .map(|d| (d.trim().to_string(), scale))
    })
    .unwrap_or((upper.clone(), 1));
    let bytes = if let Ok(n) = digits.parse::<u64>() {
        n.checked_mul(scale)
    } else {
        digits
            .parse::<f64>()
            .ok()
            .filter(|f| f.is_finite() && *f >= 0.0)
            .map(|f| (f * scale as f64).round() as u64)
    };
    bytes
        .and_then(|b| b.checked_mul(8))
        .ok_or_else(|| Error::Config(format!("invalid memory size `{text}`")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Budget for `s1` without an explicit size.
    pub memory_bits: u64,
    pub seed: u64,
    /// Compute exact counts and errors.
    pub oracle: bool,
    /// Measure per-query latency and ingestion time.
    pub timings: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            epsilon: 0.1,
            delta: 0.1,
            memory_bits: 4 << 23,
            seed: 0,
            oracle: true,
            timings: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean_ns: f64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl LatencyStats {
    fn from_samples(samples: &[u64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let at = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        Some(LatencyStats {
            mean_ns: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
            p50_ns: at(0.5),
            p99_ns: at(0.99),
            max_ns: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerP {
    pub p: usize,
    pub queries: usize,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub label: String,
    /// `sum |f^ - f| / (N * |Q|)`; absent without the oracle or queries.
    pub mean_error: Option<f64>,
    pub per_p: Vec<PerP>,
    pub latency: Option<LatencyStats>,
    pub ingest_seconds: Option<f64>,
    /// Structural size of the sketch in bits.
    pub memory_bits: u128,
    /// S1 sample size `B`.
    pub sample_size: Option<usize>,
    /// Queries whose estimate fell below the sanity threshold.
    pub below_sanity: usize,
}

impl EstimatorSummary {
    pub fn ingest_throughput(&self, n: u64) -> Option<f64> {
        self.ingest_seconds
            .filter(|&s| s > 0.0)
            .map(|s| n as f64 / s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRow {
    pub query: Query,
    pub exact: Option<u64>,
    /// Index-aligned with [`BenchmarkReport::estimators`].
    pub estimates: Vec<Estimate>,
    pub latencies_ns: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub stream_len: u64,
    pub estimators: Vec<EstimatorSummary>,
    pub rows: Vec<QueryRow>,
    pub oracle: bool,
    pub timings: bool,
}

impl BenchmarkReport {
    pub fn query_count(&self) -> usize {
        self.rows.len()
    }

    /// Per-query CSV. Columns: `query_id,query,p`, then `exact` with the
    /// oracle, then per estimator `<label>_estimate`, `<label>_abs_error`
    /// (with the oracle) and `<label>_latency_ns` (with timings).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["query_id".to_string(), "query".into(), "p".into()];
        if self.oracle {
            header.push("exact".into());
        }
        for e in &self.estimators {
            header.push(format!("{}_estimate", e.label));
            if self.oracle {
                header.push(format!("{}_abs_error", e.label));
            }
            if self.timings {
                header.push(format!("{}_latency_ns", e.label));
            }
        }
        w.write_record(&header).map_err(csv_io)?;
        for (id, row) in self.rows.iter().enumerate() {
            let mut fields = vec![
                id.to_string(),
                row.query.to_string(),
                row.query.p().to_string(),
            ];
            if let Some(f) = row.exact {
                fields.push(f.to_string());
            }
            for (i, est) in row.estimates.iter().enumerate() {
                fields.push(est.value.to_string());
                if let Some(f) = row.exact {
                    fields.push((est.value - f as f64).abs().to_string());
                }
                if self.timings {
                    fields.push(row.latencies_ns[i].to_string());
                }
            }
            w.write_record(&fields).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per estimator and `p` (with `p` empty for the overall mean):
    /// `estimator,p,queries,mean_normalized_error`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["estimator", "p", "queries", "mean_normalized_error"])
            .map_err(csv_io)?;
        for e in &self.estimators {
            let err = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                e.label.clone(),
                String::new(),
                self.rows.len().to_string(),
                err(e.mean_error),
            ])
            .map_err(csv_io)?;
            for p in &e.per_p {
                w.write_record([
                    e.label.clone(),
                    p.p.to_string(),
                    p.queries.to_string(),
                    err(self.oracle.then_some(p.mean_error)),
                ])
                .map_err(csv_io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stream records: {}", self.stream_len)?;
        writeln!(f, "queries: {}", self.rows.len())?;
        for e in &self.estimators {
            write!(f, "{}:", e.label)?;
            if let Some(err) = e.mean_error {
                write!(f, " mean normalized error {err:.3e}")?;
            }
            write!(
                f,
                " memory {:.2} MiB",
                e.memory_bits as f64 / 8.0 / (1u64 << 20) as f64
            )?;
            if let Some(b) = e.sample_size {
                write!(f, " B={b}")?;
                write!(f, " below-sanity {}", e.below_sanity)?;
            }
            if let Some(t) = e.ingest_throughput(self.stream_len) {
                write!(f, " ingest {t:.0} rec/s")?;
            }
            if let Some(l) = e.latency {
                write!(
                    f,
                    " latency mean {:.1} us p50 {:.1} us p99 {:.1} us",
                    l.mean_ns / 1e3,
                    l.p50_ns as f64 / 1e3,
                    l.p99_ns as f64 / 1e3
                )?;
            }
            writeln!(f)?;
            if e.mean_error.is_some() {
                for p in &e.per_p {
                    writeln!(
                        f,
                        "  p={} queries {} mean error {:.3e}",
                        p.p, p.queries, p.mean_error
                    )?;
                }
            }
        }
        Ok(())
    }
}

enum Built {
    S0(S0Sketch, bool),
    S1(OmniSketch),
}

impl Built {
    fn estimate(&self, q: &Query) -> Result<Estimate> {
        Ok(match self {
            Built::S0(s, true) => s.estimate_min(q)?,
            Built::S0(s, false) => s.estimate_cap(q)?,
            Built::S1(s) => s.estimate(q)?,
        })
    }

    fn insert(&mut self, r: &Record) -> Result<()> {
        match self {
            Built::S0(s, _) => s.insert(r)?,
            Built::S1(s) => s.insert(r)?,
        }
        Ok(())
    }
}

/// S1 parameters a benchmark uses for `memory_bits` on `attributes`
/// equality-only attributes.
pub fn s1_params(
    config: &BenchConfig,
    memory_bits: u64,
    attributes: usize,
) -> Result<SketchParams> {
    Ok(
        configure_grids(config.epsilon, config.delta, memory_bits, attributes)?
            .with_seed(config.seed),
    )
}

/// Builds each estimator over `records`, runs every query and summarizes
/// the errors against the exact count.
pub fn run_benchmark(
    records: &[Record],
    attributes: usize,
    workload: &QueryWorkload,
    estimators: &[EstimatorSpec],
    config: &BenchConfig,
) -> Result<BenchmarkReport> {
    if let Some(r) = records.iter().find(|r| r.values.len() != attributes) {
        return Err(Error::EstimatorSchemaMismatch(format!(
            "record {} has {} values, expected {attributes}",
            r.rid.0,
            r.values.len()
        )));
    }
    if let Some(q) = workload
        .queries
        .iter()
        .find(|q| q.predicates().iter().any(|p| p.attribute >= attributes))
    {
        return Err(Error::EstimatorSchemaMismatch(format!(
            "query `{q}` refers to an attribute beyond a{attributes}"
        )));
    }
    if let Some(q) = workload.queries.iter().find(|q| q.has_range()) {
        return Err(Error::EstimatorSchemaMismatch(format!(
            "query `{q}` has a range predicate; benchmark streams are equality-only"
        )));
    }

    let n = records.len() as u64;
    let mut built = Vec::with_capacity(estimators.len());
    let mut summaries = Vec::with_capacity(estimators.len());
    for spec in estimators {
        let (mut sketch, sample_size) = match spec.kind {
            EstimatorKind::S0Min | EstimatorKind::S0Cap => (
                Built::S0(
                    S0Sketch::new(attributes, config.epsilon, config.delta, config.seed)?,
                    spec.kind == EstimatorKind::S0Min,
                ),
                None,
            ),
            EstimatorKind::S1 { memory_bits } => {
                let params = s1_params(
                    config,
                    memory_bits.unwrap_or(config.memory_bits),
                    attributes,
                )?;
                let b = params.sample_size;
                (
                    Built::S1(OmniSketch::new(params, Schema::categorical(attributes))?),
                    Some(b),
                )
            }
        };
        let start = Instant::now();
        for r in records {
            sketch.insert(r)?;
        }
        let ingest_seconds = config.timings.then(|| start.elapsed().as_secs_f64());
        let memory_bits = match &sketch {
            Built::S0(s, _) => s0_bits(s),
            Built::S1(s) => s.accounted_bits(),
        };
        summaries.push(EstimatorSummary {
            label: spec.label.clone(),
            mean_error: None,
            per_p: Vec::new(),
            latency: None,
            ingest_seconds,
            memory_bits,
            sample_size,
            below_sanity: 0,
        });
        built.push(sketch);
    }

    let store: Option<RecordStore> = config.oracle.then(|| records.iter().cloned().collect());
    let mut rows = Vec::with_capacity(workload.len());
    for q in &workload.queries {
        let exact = store.as_ref().map(|s| s.exact_count(q));
        let mut estimates = Vec::with_capacity(built.len());
        let mut latencies_ns = Vec::with_capacity(built.len());
        for b in &built {
            let start = Instant::now();
            let est = b.estimate(q)?;
            if config.timings {
                latencies_ns.push(start.elapsed().as_nanos() as u64);
            }
            estimates.push(est);
        }
        rows.push(QueryRow {
            query: q.clone(),
            exact,
            estimates,
            latencies_ns,
        });
    }

    let norm = n.max(1) as f64;
    for (i, s) in summaries.iter_mut().enumerate() {
        s.below_sanity = rows.iter().filter(|r| r.estimates[i].below_sanity).count();
        if config.timings {
            let samples: Vec<u64> = rows.iter().map(|r| r.latencies_ns[i]).collect();
            s.latency = LatencyStats::from_samples(&samples);
        }
        let mut by_p: Vec<(usize, usize, f64)> = Vec::new();
        let mut total = 0.0;
        for r in &rows {
            let err = r
                .exact
                .map_or(0.0, |f| (r.estimates[i].value - f as f64).abs() / norm);
            total += err;
            match by_p.iter_mut().find(|(p, _, _)| *p == r.query.p()) {
                Some(slot) => {
                    slot.1 += 1;
                    slot.2 += err;
                }
                None => by_p.push((r.query.p(), 1, err)),
            }
        }
        by_p.sort_by_key(|&(p, _, _)| p);
        s.per_p = by_p
            .into_iter()
            .map(|(p, queries, sum)| PerP {
                p,
                queries,
                mean_error: sum / queries as f64,
            })
            .collect();
        if config.oracle && !rows.is_empty() {
            s.mean_error = Some(total / rows.len() as f64);
        }
    }

    Ok(BenchmarkReport {
        stream_len: n,
        estimators: summaries,
        rows,
        oracle: config.oracle,
        timings: config.timings,
    })
}

/// 64-bit rids stored plus one 32-bit length per cell.
fn s0_bits(s: &S0Sketch) -> u128 {
    let cells = (s.attribute_count() * s.width() * s.depth()) as u128;
    s.stored_ids() as u128 * 64 + cells * 32
}
