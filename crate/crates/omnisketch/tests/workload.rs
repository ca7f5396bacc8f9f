use omnisketch::workload::*;
use omnisketch::Error;
use omnisketch_core::{Predicate, Query, Record, RecordId, RecordStore};

#[test]
fn uniform_marginals_within_five_sigma() {
    let n = 100_000u64;
    let records = generate_stream(&StreamSpec::uniform(n, 2, 100, 17)).unwrap();
    for a in 0..2 {
        let mut freq = [0u64; 101];
        for r in &records {
            assert!((1..=100).contains(&r.values[a]));
            freq[r.values[a] as usize] += 1;
        }
        let mean = n as f64 / 100.0;
        let sigma = (n as f64 * 0.01 * 0.99).sqrt();
        for (v, &f) in freq.iter().enumerate().skip(1) {
            assert!(
                (f as f64 - mean).abs() <= 5.0 * sigma,
                "a{} value {v}: {f}",
                a + 1
            );
        }
    }
}

#[test]
fn zipf_rank_ratio() {
    let records = generate_stream(&StreamSpec::zipf(100_000, 1, 1.0, 1000, 5)).unwrap();
    let count = |v| records.iter().filter(|r| r.values[0] == v).count() as f64;
    let ratio = count(1) / count(2);
    assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
    assert!(records.iter().all(|r| (1..=1000).contains(&r.values[0])));
}

#[test]
fn streams_are_deterministic_per_seed() {
    let spec = StreamSpec::zipf(1000, 3, 1.3, 100, 9);
    assert_eq!(
        generate_stream(&spec).unwrap(),
        generate_stream(&spec).unwrap()
    );
    let other = StreamSpec {
        seed: 10,
        ..spec.clone()
    };
    assert_ne!(
        generate_stream(&spec).unwrap(),
        generate_stream(&other).unwrap()
    );
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(generate_stream(&StreamSpec::uniform(10, 2, 1, 0)).is_err());
    assert!(generate_stream(&StreamSpec::zipf(10, 2, 0.0, 10, 0)).is_err());
    assert!(generate_stream(&StreamSpec::zipf(10, 0, 1.0, 10, 0)).is_err());
}

#[test]
fn generated_queries_hit_the_stream_and_are_distinct() {
    let records = generate_stream(&StreamSpec::zipf(50_000, 5, 1.1, 100, 2)).unwrap();
    let spec = WorkloadSpec {
        sample_rate: 0.001,
        seed: 3,
        ..WorkloadSpec::default()
    };
    let w = generate_queries(&records, &spec);
    let store: RecordStore = records.iter().cloned().collect();
    assert!(!w.is_empty());
    assert!(w.len() <= 50 * 10 * 4);
    assert_eq!(w.queries.len(), w.provenance.len());
    let mut seen = std::collections::HashSet::new();
    for (q, prov) in w.queries.iter().zip(&w.provenance) {
        assert!(seen.insert(q.clone()));
        assert!((2..=5).contains(&q.p()));
        assert!(store.exact_count(q) >= 1);
        let src = &records[prov.rid.0 as usize];
        assert!(q.matches(src));
        assert_eq!(
            q.predicates()
                .iter()
                .map(|p| p.attribute)
                .collect::<Vec<_>>(),
            prov.attributes
        );
    }
    assert_eq!(w, generate_queries(&records, &spec));
}

#[test]
fn collision_free_stream_has_zero_s0_cap_error() {
    // Every attribute value is unique to its record, so no two records share
    // a cell unless hashing collides them in every row; s0cap stays exact.
    let records: Vec<Record> = (0..2_000u64)
        .map(|i| Record::new(RecordId(i), vec![i + 1, i + 1, i + 1]))
        .collect();
    let w = generate_queries(
        &records,
        &WorkloadSpec {
            sample_rate: 0.05,
            ..WorkloadSpec::default()
        },
    );
    let est = parse_estimators("s0cap,s0min").unwrap();
    let report = run_benchmark(&records, 3, &w, &est, &BenchConfig::default()).unwrap();
    assert_eq!(report.query_count(), w.len());
    assert_eq!(report.estimators[0].mean_error, Some(0.0));
    assert!(report.estimators[1].mean_error.unwrap() >= 0.0);
}

#[test]
fn empty_workload_report() {
    let records = generate_stream(&StreamSpec::uniform(100, 2, 10, 1)).unwrap();
    let est = parse_estimators("s0min,s1@1MB").unwrap();
    let report = run_benchmark(
        &records,
        2,
        &QueryWorkload::default(),
        &est,
        &BenchConfig::default(),
    )
    .unwrap();
    assert_eq!(report.query_count(), 0);
    assert!(report
        .estimators
        .iter()
        .all(|e| e.mean_error.is_none() && e.per_p.is_empty()));
}

#[test]
fn per_p_counts_reconcile() {
    let records = generate_stream(&StreamSpec::zipf(20_000, 4, 1.1, 300, 6)).unwrap();
    let w = generate_queries(
        &records,
        &WorkloadSpec {
            sample_rate: 0.002,
            ..WorkloadSpec::default()
        },
    );
    let est = parse_estimators("s0min,s0cap,s1@1MB").unwrap();
    let report = run_benchmark(&records, 4, &w, &est, &BenchConfig::default()).unwrap();
    for e in &report.estimators {
        assert_eq!(
            e.per_p.iter().map(|p| p.queries).sum::<usize>(),
            report.query_count()
        );
        let weighted: f64 = e
            .per_p
            .iter()
            .map(|p| p.mean_error * p.queries as f64)
            .sum::<f64>()
            / report.query_count() as f64;
        assert!((weighted - e.mean_error.unwrap()).abs() < 1e-12);
        assert!(e.latency.is_some());
        assert!(e.ingest_seconds.is_some());
    }
    assert!(report.estimators[2].memory_bits <= 8 << 20);
}

#[test]
fn schema_mismatch_is_reported() {
    let records = vec![Record::new(RecordId(0), vec![1, 2])];
    let est = parse_estimators("s0min").unwrap();
    let cfg = BenchConfig::default();
    assert!(matches!(
        run_benchmark(&records, 3, &QueryWorkload::default(), &est, &cfg),
        Err(Error::EstimatorSchemaMismatch(_))
    ));
    let w = QueryWorkload {
        queries: vec![Query::new(vec![Predicate::equals(4, 1)])],
        provenance: vec![],
    };
    assert!(matches!(
        run_benchmark(&records, 2, &w, &est, &cfg),
        Err(Error::EstimatorSchemaMismatch(_))
    ));
}

#[test]
fn s1_error_does_not_grow_with_memory() {
    let records = generate_stream(&StreamSpec::zipf(100_000, 4, 1.1, 1000, 21)).unwrap();
    let w = generate_queries(
        &records,
        &WorkloadSpec {
            sample_rate: 0.0005,
            seed: 22,
            ..WorkloadSpec::default()
        },
    );
    assert!(w.len() >= 300, "{} queries", w.len());
    let est = parse_estimators("s1@1MB,s1@4MB,s1@16MB").unwrap();
    let cfg = BenchConfig {
        timings: false,
        seed: 23,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&records, 4, &w, &est, &cfg).unwrap();
    let n = records.len() as f64;
    let errs: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            report
                .rows
                .iter()
                .map(|r| (r.estimates[i].value - r.exact.unwrap() as f64).abs() / n)
                .collect()
        })
        .collect();
    for pair in errs.windows(2) {
        // paired difference: mean(small - large) must not be significantly negative
        let diffs: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect();
        let m = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        let se = (var / diffs.len() as f64).sqrt();
        assert!(
            m >= -3.0 * se,
            "mean error rose with memory: diff {m} se {se}"
        );
    }
}
