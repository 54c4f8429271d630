use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ipa_bench::{fixture, generated};
use ipa_core::analysis::analyze;
use ipa_core::composer::{build_abstract_spec, compositional_check, direct_check};
use ipa_core::explorer::{explore, Bounds};

fn exploration(c: &mut Criterion) {
    let mut group = c.benchmark_group("explore");
    group.sample_size(10);
    for workers in [1, 2] {
        let bounds = Bounds { workers, ..Bounds::default() };
        let toy = fixture("coordinator-toy");
        group.bench_with_input(BenchmarkId::new("coordinator-toy/S", workers), &bounds, |b, bounds| {
            b.iter(|| explore(&toy.spec, &[], bounds).unwrap())
        });
        let raft = fixture("raft3");
        let a = build_abstract_spec(&raft.spec, &raft.manifest, &analyze(&raft.spec).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("raft3/A", workers), &bounds, |b, bounds| {
            b.iter(|| explore(&a.spec, &[], bounds).unwrap())
        });
    }
    group.finish();
}

fn routes(c: &mut Criterion) {
    let mut group = c.benchmark_group("routes");
    group.sample_size(10);
    let bounds = Bounds::default();
    for (name, p) in
        [("coordinator-toy", fixture("coordinator-toy")), ("gen-3", generated(3)), ("raft3", fixture("raft3"))]
    {
        group.bench_function(BenchmarkId::new("compositional", name), |b| {
            b.iter(|| compositional_check(&p.spec, &p.manifest, &bounds).unwrap())
        });
        if name != "raft3" {
            group.bench_function(BenchmarkId::new("direct", name), |b| {
                b.iter(|| direct_check(&p.spec, &p.manifest, &bounds).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, exploration, routes);
criterion_main!(benches);
