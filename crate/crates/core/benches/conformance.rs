use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use crosstl::backend::Registry;
use crosstl::conformance::{load_corpus, run_programs, Execution};

fn conformance(c: &mut Criterion) {
    let programs = load_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")).expect("corpus");
    let registry = Registry::with_builtins();
    let mut group = c.benchmark_group("conformance");
    group.sample_size(20);
    group.bench_function("sequential", |b| b.iter(|| run_programs(&programs, &registry, Execution::Sequential)));
    group.bench_function("parallel", |b| b.iter(|| run_programs(&programs, &registry, Execution::Parallel)));
    group.finish();
}

criterion_group!(benches, conformance);
criterion_main!(benches);
