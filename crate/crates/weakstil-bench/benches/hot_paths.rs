//! Benchmarks for the inner loops: forward/backward through a bag,
//! AUC ranking, and one Adam update.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use weakstil::metrics::{auc, TilClass};
use weakstil::model::{backward, forward, HeadKind};
use weakstil::optim::{adam_step, AdamHyper, AdamState};
use weakstil::rng::Rng;
use weakstil_bench::{bench_bag, bench_head};

fn bench_forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("head");
    for kind in HeadKind::ALL {
        let head = bench_head(kind, 256, 1);
        let bag = bench_bag(256, 200, 2);
        group.bench_function(format!("forward/{kind:?}"), |b| {
            b.iter(|| forward(black_box(&head), black_box(&bag)).unwrap())
        });
        group.bench_function(format!("backward/{kind:?}"), |b| {
            b.iter(|| backward(black_box(&head), black_box(&bag), 0.3).unwrap())
        });
    }
    group.finish();
}

fn bench_auc(c: &mut Criterion) {
    let mut rng = Rng::from_seed(3);
    let scores: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
    let labels: Vec<TilClass> = (0..1000)
        .map(|_| if rng.next_f64() < 0.3 { TilClass::Low } else { TilClass::High })
        .collect();
    c.bench_function("auc/1000", |b| {
        b.iter(|| auc(black_box(&scores), black_box(&labels)).unwrap())
    });
}

fn bench_adam(c: &mut Criterion) {
    let head = bench_head(HeadKind::TwoLinear, 256, 4);
    let bag = bench_bag(256, 200, 5);
    let grads = backward(&head, &bag, 0.3).unwrap();
    let state = AdamState::new(head.params.len(), AdamHyper::new(1e-3, 1e-4));
    c.bench_function("adam_step/two-linear-256", |b| {
        b.iter_batched(
            || (head.clone(), state.clone()),
            |(h, s)| adam_step(black_box(&h), black_box(&grads), black_box(&s)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_forward_backward, bench_auc, bench_adam);
criterion_main!(benches);
