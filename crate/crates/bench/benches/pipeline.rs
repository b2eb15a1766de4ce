//! Criterion benchmarks over the pipeline hot paths: traffic synthesis,
//! CSV ingest, forest fitting and KNN queries (indexed vs exhaustive).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use flowids_core::dataset::Dataset;
use flowids_core::ingest::{FlowReader, FlowWriter, IngestOptions};
use flowids_core::models::{brute_force_predict, fit_forest, fit_knn, ForestConfig, KnnConfig};
use flowids_core::preprocess::{build_split, PipelineConfig};
use flowids_core::synthgen::{generate, ScenarioConfig};

const BENCH_SCENARIO: &str = "\
seed = 9
start = 2017-03-17 06:00:00.000
duration = 14400
benign_rate = 1.2
clients = 192.168.100.5, 192.168.100.6, 192.168.100.7
servers = 192.168.100.3, 192.168.100.4
external_server = 10.10.0.10
external_clients = 203.0.113.5
attackers = 172.31.9.20, 172.31.9.21
attack = port_scan, 2017-03-17 07:00:00.000, 600, 172.31.9.20, 192.168.100.3, 900
attack = dos, 2017-03-17 08:00:00.000, 300, 172.31.9.21, 192.168.100.4, 2500
attack = brute_force, 2017-03-17 09:00:00.000, 900, 172.31.9.20, 192.168.100.4, 300
";

fn bench_scenario() -> ScenarioConfig {
    ScenarioConfig::from_text(BENCH_SCENARIO).expect("bench scenario parses")
}

fn train_dataset() -> Dataset {
    let traffic = generate(&bench_scenario()).expect("generate");
    let split = build_split(traffic.flows, &PipelineConfig::default()).expect("split");
    split.train
}

fn synthgen_benchmark(c: &mut Criterion) {
    let config = bench_scenario();
    let flows = config.planned_benign_flows() + config.planned_attack_flows();
    let mut group = c.benchmark_group("synthgen");
    group.throughput(Throughput::Elements(flows));
    group.sample_size(10);
    group.bench_function("generate", |b| b.iter(|| generate(&config).unwrap()));
    group.finish();
}

fn ingest_benchmark(c: &mut Criterion) {
    let traffic = generate(&bench_scenario()).expect("generate");
    let mut csv_bytes = Vec::new();
    {
        let mut writer = FlowWriter::from_writer(&mut csv_bytes).unwrap();
        for flow in &traffic.flows {
            writer.write(flow).unwrap();
        }
        writer.finish().unwrap();
    }
    let mut group = c.benchmark_group("ingest");
    group.throughput(Throughput::Elements(traffic.flows.len() as u64));
    group.bench_function("parse_csv", |b| {
        b.iter(|| {
            let reader =
                FlowReader::from_reader(csv_bytes.as_slice(), IngestOptions::default(), "bench")
                    .unwrap();
            let mut rows = 0usize;
            for item in reader {
                item.unwrap();
                rows += 1;
            }
            rows
        })
    });
    group.finish();
}

fn forest_benchmark(c: &mut Criterion) {
    let train = train_dataset();
    let config = ForestConfig::default();
    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.throughput(Throughput::Elements(train.len() as u64));
    group.bench_function(BenchmarkId::new("fit", train.len()), |b| {
        b.iter(|| fit_forest(&train, &config).unwrap())
    });
    let forest = fit_forest(&train, &config).unwrap();
    group.throughput(Throughput::Elements(1000));
    group.bench_function("predict_1k", |b| {
        b.iter(|| {
            train.rows[..1000]
                .iter()
                .map(|row| forest.predict(row))
                .sum::<u32>()
        })
    });
    group.finish();
}

fn knn_benchmark(c: &mut Criterion) {
    let train = train_dataset();
    let config = KnnConfig::default();
    let knn = fit_knn(&train, &config).unwrap();
    let queries: Vec<_> = train.rows.iter().step_by(37).take(200).copied().collect();
    let n_classes = train.scheme.n_classes();

    let mut group = c.benchmark_group("knn");
    group.throughput(Throughput::Elements(queries.len() as u64));
    group.bench_function(BenchmarkId::new("indexed", train.len()), |b| {
        b.iter(|| queries.iter().map(|q| knn.predict(q)).sum::<u32>())
    });
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("linear_scan", train.len()), |b| {
        b.iter(|| {
            queries
                .iter()
                .map(|q| brute_force_predict(&train.rows, &train.targets, n_classes, q, 3, 2.0))
                .sum::<u32>()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    synthgen_benchmark,
    ingest_benchmark,
    forest_benchmark,
    knn_benchmark
);
criterion_main!(benches);
