use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deflate_core::corpus::{generate_breadth_system, generate_random_power_system, list_cases, load_case, PowerSystemSpec};
use deflate_core::exec::Execution;
use deflate_core::report::{bench, PipelineOptions};

fn corpus(c: &mut Criterion) {
    // sec5_sys3 dominates everything else; keep it out of the timed set
    let cases: Vec<_> = list_cases()
        .into_iter()
        .filter(|n| *n != "sec5_sys3")
        .map(|n| load_case(n).unwrap())
        .collect();
    let opts = PipelineOptions::default();
    let mut g = c.benchmark_group("corpus");
    for (label, mode) in [("Sequential", Execution::Sequential), ("Parallel", Execution::Parallel)] {
        g.bench_function(BenchmarkId::from_parameter(label), |b| b.iter(|| bench(&cases, &opts, mode)));
    }
    g.finish();
}

fn generated(c: &mut Criterion) {
    let mut cases: Vec<_> = (0..24u64)
        .map(|s| generate_random_power_system(&PowerSystemSpec::unmixed(vec![2, 3], s)).unwrap())
        .collect();
    cases.extend((5..=20).step_by(5).map(|n| generate_breadth_system(n).unwrap()));
    let opts = PipelineOptions::default();
    let mut g = c.benchmark_group("generated");
    g.sample_size(20);
    for (label, mode) in [("Sequential", Execution::Sequential), ("Parallel", Execution::Parallel)] {
        g.bench_function(BenchmarkId::from_parameter(label), |b| b.iter(|| bench(&cases, &opts, mode)));
    }
    g.finish();
}

criterion_group!(benches, corpus, generated);
criterion_main!(benches);
