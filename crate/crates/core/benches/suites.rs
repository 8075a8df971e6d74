use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ratheun::par::Execution;
use ratheun::verify::{run_suite, Suite, SuiteConfig};
use ratheun::PrecisionContext;

fn config(exec: Execution, precision: u32) -> SuiteConfig {
    SuiteConfig {
        seed: 42,
        draws: Some(8),
        n_max: None,
        ctx: PrecisionContext::with_precision(precision).unwrap(),
        exec,
    }
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suites");
    g.sample_size(10);
    for suite in [Suite::Raising, Suite::GevpSplit, Suite::SeriesMatch, Suite::FiniteDim] {
        for (label, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            let cfg = config(exec, 15);
            g.bench_with_input(BenchmarkId::new(suite.name(), label), &cfg, |b, cfg| {
                b.iter(|| run_suite(suite, cfg).unwrap())
            });
        }
    }
    g.finish();
}

fn double_double(c: &mut Criterion) {
    let mut g = c.benchmark_group("double-double");
    g.sample_size(10);
    for (label, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        let cfg = config(exec, 30);
        g.bench_with_input(BenchmarkId::new("raising", label), &cfg, |b, cfg| {
            b.iter(|| run_suite(Suite::Raising, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, suites, double_double);
criterion_main!(benches);
