use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcrack::{jacobian, CallLedger, CircuitSpec, EvalMode, GradMethod};
use qcrack_bench::fixture_input;
use std::hint::black_box;

fn methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("jacobian");
    let ledger = CallLedger::default();
    for depth in [1usize, 3, 6] {
        let spec = CircuitSpec::new(4, depth).unwrap();
        let input = fixture_input(&spec);
        for method in [
            GradMethod::Backprop,
            GradMethod::finite_diff(),
            GradMethod::param_shift(),
        ] {
            group.bench_function(BenchmarkId::new(method.name(), depth), |b| {
                b.iter(|| {
                    jacobian(&spec, black_box(&input), method, EvalMode::Exact, &ledger).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, methods);
criterion_main!(benches);
