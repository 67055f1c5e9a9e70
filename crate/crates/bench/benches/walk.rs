use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qrws_core::{
    fit_hill, run_walk, sweep_omega, tables, CoinPhases, FitOptions, SequenceKind, WalkConfig,
    WalkState, Workers,
};

fn walk_step(c: &mut Criterion) {
    for m in [6, 9, 12] {
        let mut state = WalkState::initial(m).unwrap();
        let phases = CoinPhases::new(2.1, 3.7);
        c.bench_function(&format!("step m={m}"), |b| {
            b.iter(|| state.step(black_box(phases), &[0]))
        });
    }
}

fn full_run(c: &mut Criterion) {
    let config = WalkConfig::single(9).unwrap();
    let phases = vec![CoinPhases::new(2.1, 3.7); config.iterations()];
    c.bench_function("run_walk m=9", |b| {
        b.iter(|| run_walk(&config, black_box(&phases)).unwrap())
    });
}

fn cross_section_and_fit(c: &mut Criterion) {
    let theta = tables::angle(233);
    c.bench_function("sweep_omega m=6 201 points", |b| {
        b.iter(|| {
            sweep_omega(
                6,
                SequenceKind::PM,
                black_box(theta),
                201,
                &[0],
                Workers::ONE,
            )
            .unwrap()
        })
    });
    let cs = sweep_omega(6, SequenceKind::PM, theta, 201, &[0], Workers::ONE).unwrap();
    c.bench_function("fit_hill 201 points", |b| {
        b.iter(|| fit_hill(&cs.omega_axis, black_box(&cs.prob), &FitOptions::default()).unwrap())
    });
}

criterion_group!(benches, walk_step, full_run, cross_section_and_fit);
criterion_main!(benches);
