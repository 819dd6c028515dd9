//! Stepper throughput: sparse vs dense storage, sequential vs parallel
//! execution. Run with `--no-default-features` to see the build without
//! rayon, where the parallel rows fall back to sequential.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use grainforge::seeding::{generate_corpus, generate_structure, CorpusOptions};
use grainforge::sim::{PhaseFieldState, SimParams, StepMode, StepOptions};
use grainforge::Exec;

fn relaxed_state(size: usize, grains: usize) -> PhaseFieldState {
    let labels = generate_structure(grains, size, size, 7, CorpusOptions::default()).unwrap();
    let mut s = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    for _ in 0..50 {
        s.step();
    }
    s
}

fn step_modes(c: &mut Criterion) {
    let base = relaxed_state(256, 28);
    let mut group = c.benchmark_group("step_256x256_28_grains");
    group.sample_size(10);
    for (name, mode, exec) in [
        ("sparse_parallel", StepMode::Sparse, Exec::Parallel),
        ("sparse_sequential", StepMode::Sparse, Exec::Sequential),
        ("dense_parallel", StepMode::Dense, Exec::Parallel),
        ("dense_sequential", StepMode::Dense, Exec::Sequential),
    ] {
        let opts = StepOptions::new(mode, exec);
        let mut start = base.clone();
        if mode == StepMode::Dense {
            start.densify();
        }
        group.bench_function(name, |b| {
            b.iter_batched(
                || start.clone(),
                |mut s| {
                    for _ in 0..5 {
                        s.step_with(opts);
                    }
                    black_box(s)
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let mut group = c.benchmark_group("corpus_8x128x128_20_grains");
    group.sample_size(10);
    for (name, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        group.bench_function(name, |b| {
            b.iter(|| black_box(generate_corpus(8, 20, 128, 128, 0, CorpusOptions::default(), exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, step_modes, corpus);
criterion_main!(benches);
