use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use noesis_core::io::load_scenario;
use noesis_core::planner::exact_value_tiny_with;
use noesis_core::teach_sim::run_episodes;
use noesis_core::Execution;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn episodes(c: &mut Criterion) {
    let star = load_scenario(fixture("star.scenario")).unwrap();
    let mut group = c.benchmark_group("run_episodes");
    for n in [256usize, 4096] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| run_episodes(&star.scenario, &star.strategy, 6, black_box(7), n, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn exact_value(c: &mut Criterion) {
    let full = load_scenario(fixture("full_teaching.scenario")).unwrap();
    let mut group = c.benchmark_group("exact_value_tiny");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| exact_value_tiny_with(black_box(&full.scenario), 3, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, episodes, exact_value);
criterion_main!(benches);
