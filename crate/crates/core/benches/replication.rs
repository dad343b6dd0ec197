use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gfou::fbm::{FbmMethod, FbmSampler, HurstIndex};
use gfou::levy::LevyModel;
use gfou::mc::{replicate, replicate_sequential, stream};
use gfou::path::uniform_grid;
use gfou::process::{GfouSimulator, GfouSpec, Initial};

fn stationary_sim() -> GfouSimulator {
    GfouSimulator::new(&GfouSpec {
        levy: LevyModel::brownian(1.5, 1.0),
        hurst: 0.7,
        initial: Initial::Stationary { truncation: Some(20.0) },
        horizon: 2.0,
        mesh: 1.0 / 64.0,
    })
    .unwrap()
}

// Same seeds, same results; only the scheduling differs. Without the
// `parallel` feature both rows run the sequential loop.
fn replication(c: &mut Criterion) {
    let sim = stationary_sim();
    let mut g = c.benchmark_group("replicate_gfou_stationary");
    g.sample_size(10);
    for reps in [64usize, 512] {
        g.bench_with_input(BenchmarkId::new("parallel", reps), &reps, |b, &reps| {
            b.iter(|| replicate(reps, 1, None, |_, rng| sim.sample(rng).unwrap().last_value()))
        });
        g.bench_with_input(BenchmarkId::new("sequential", reps), &reps, |b, &reps| {
            b.iter(|| replicate_sequential(reps, 1, |_, rng| sim.sample(rng).unwrap().last_value()))
        });
    }
    g.finish();
}

fn fbm_methods(c: &mut Criterion) {
    let h = HurstIndex::new(0.7).unwrap();
    let mut g = c.benchmark_group("fbm_path");
    for n in [256usize, 2048] {
        let times = uniform_grid(0.0, 1.0, n);
        for (name, method) in [("circulant", FbmMethod::Circulant), ("cholesky", FbmMethod::Cholesky)] {
            let sampler = FbmSampler::new(h, &times, method).unwrap();
            let mut rng = stream(2, 0);
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| black_box(sampler.sample_values(&mut rng))));
        }
    }
    g.finish();
}

criterion_group!(benches, replication, fbm_methods);
criterion_main!(benches);
