use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grouptest::dgp::DgpConfig;
use grouptest::exec::Execution;
use grouptest::sim::count_rejections;
use grouptest::SlopeTestSuite;

fn replications(c: &mut Criterion) {
    let suite = SlopeTestSuite::default();
    let mut group = c.benchmark_group("count_rejections");
    group.sample_size(10);
    for (n, t) in [(50, 20), (100, 100)] {
        let dgp = DgpConfig::two_group(n, t, n / 5, 0.2);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, format!("N{n}_T{t}")), &dgp, |b, dgp| {
                b.iter(|| count_rejections(dgp, &suite, 64, 1, exec, None).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
