use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use proxysync_core::par::Execution;
use proxysync_core::scenario::library;
use proxysync_core::scenario::sweep::{sweep, SweepParameter};

fn latency_sweep(c: &mut Criterion) {
    let script = library::tictactoe();
    let values = [0.0, 500.0, 1000.0, 1500.0, 2000.0];
    let mut group = c.benchmark_group("tictactoe-latency-sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| sweep(&script, SweepParameter::ArtificialLatency, &values, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, latency_sweep);
criterion_main!(benches);
