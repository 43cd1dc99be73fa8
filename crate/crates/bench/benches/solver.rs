use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use jip_bench::{spd, symmetric, synthetic};
use jip_core::eigen::{gen_eig_smallest, sym_eig};
use jip_core::terms::StructureSet;
use jip_core::{fit, ClassifierSpec, JipHyperParams};

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    for d in [20usize, 50, 100] {
        let lhs = symmetric(d);
        let rhs = spd(d);
        group.bench_with_input(BenchmarkId::new("sym_eig", d), &d, |b, _| {
            b.iter(|| sym_eig(black_box(&lhs)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gen_eig_smallest", d), &d, |b, _| {
            b.iter(|| gen_eig_smallest(black_box(&lhs), black_box(&rhs), d / 5, 0.0).unwrap())
        });
    }
    group.finish();
}

fn terms(c: &mut Criterion) {
    let bench = synthetic(100);
    let ds = &bench.dataset;
    let ys: Vec<u32> = ds.source.labels.iter().map(|l| l.unwrap()).collect();
    let yt = bench.target_truth.clone();
    c.bench_function("structure_set/n=100", |b| {
        b.iter(|| StructureSet::build(&ds.source.features, &ys, &ds.target.features, &yt, 10).unwrap())
    });
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for n in [50usize, 100, 200] {
        let bench = synthetic(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fit(&bench.dataset, &JipHyperParams::default(), ClassifierSpec::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eigen, terms, end_to_end);
criterion_main!(benches);
