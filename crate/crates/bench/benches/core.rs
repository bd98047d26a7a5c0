use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tomocal_bench::additive_tomograms;
use tomocal_core::calibration::Objective;
use tomocal_core::optim::{pattern_search, Bounds, PatternSearchOptions};
use tomocal_core::{effects_from_model, maxlik, MaxLikOptions};

fn bench_maxlik(c: &mut Criterion) {
    let (tomos, scheme, nominal) = additive_tomograms(30);
    let effects = effects_from_model(&nominal, &scheme).unwrap();
    let opts = MaxLikOptions::default();
    c.bench_function("maxlik/single", |b| b.iter(|| maxlik(black_box(&tomos[7]), &effects, &opts).unwrap()));
}

fn bench_cost(c: &mut Criterion) {
    let (tomos, scheme, nominal) = additive_tomograms(30);
    let objective = Objective::new(nominal, &tomos, &scheme);
    let x = vec![0.01; 12];
    c.bench_function("cost/fibonacci30", |b| b.iter(|| objective.eval(black_box(&x))));
}

fn bench_pattern_search(c: &mut Criterion) {
    let (tomos, scheme, nominal) = additive_tomograms(30);
    let objective = Objective::new(nominal, &tomos, &scheme);
    let f = |x: &[f64]| objective.eval(x);
    let bounds = Bounds::symmetric(12, 0.5).unwrap();
    let x0 = vec![0.0; 12];
    let f0 = f(&x0);
    let opts = PatternSearchOptions {
        mesh_initial: 0.1,
        mesh_min: 1e-5,
        max_evaluations: 500,
        seed: 1,
    };
    let mut group = c.benchmark_group("pattern_search");
    group.sample_size(10);
    group.bench_function("500_evaluations", |b| b.iter(|| pattern_search(&f, black_box(&x0), f0, &bounds, &opts)));
    group.finish();
}

criterion_group!(benches, bench_maxlik, bench_cost, bench_pattern_search);
criterion_main!(benches);
