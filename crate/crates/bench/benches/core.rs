use std::collections::BTreeMap;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use simon_core::game::{Candidates, FHatTable, PosteriorState};
use simon_core::oracle::{build_constant_depth_oracle, canonical_b};
use simon_core::sampler::{sample_noisy_with, simulate_experiment, NoiseProfile, SeededRng};
use simon_core::stats::{bootstrap_nts, fit_model, BootstrapConfig, GameSetup, Model, ScalingPoint};

fn flat_fhat(w: usize, f: f64) -> FHatTable {
    FHatTable::new((1..=w).map(|i| (i, f)).collect::<BTreeMap<_, _>>()).unwrap()
}

fn posterior(c: &mut Criterion) {
    let (n, w) = (12, 4);
    let cands = Arc::new(Candidates::new(n, w).unwrap());
    let fhat = flat_fhat(w, 0.95);
    let b = canonical_b(n, 3).unwrap();
    let mut rng = SeededRng::new(1, 0);
    let zs: Vec<_> = (0..16).map(|_| sample_noisy_with(&b, 0.95, &mut rng)).collect();
    c.bench_function("posterior update n=12 w=4 x16", |bch| {
        bch.iter_batched(
            || PosteriorState::new(cands.clone(), &fhat).unwrap(),
            |mut st| {
                for z in &zs {
                    black_box(st.update(z));
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn oracle(c: &mut Criterion) {
    c.bench_function("constant-depth oracle n=127 hw=64", |b| {
        b.iter(|| build_constant_depth_oracle(black_box(127), black_box(64)).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let profile = NoiseProfile::noiseless();
    c.bench_function("simulate n=10 w=5 1000 shots/class", |b| {
        b.iter(|| simulate_experiment(&[10], 5, 1000, &profile, black_box(3)).unwrap())
    });
}

fn bootstrap(c: &mut Criterion) {
    let (n, w) = (6, 3);
    let records = simulate_experiment(&[n], w, 600, &NoiseProfile::noiseless(), 5).unwrap();
    let fhat = flat_fhat(w, 0.999);
    let game = GameSetup { n, w, theta: 0.8, f_hat: &fhat };
    let cfg = BootstrapConfig { folds: 10, resamples: 2000, seed: 9 };
    c.bench_function("fold bootstrap n=6 w=3 2000 resamples", |b| {
        b.iter(|| bootstrap_nts(&records, &game, &cfg).unwrap())
    });
}

fn lm_fit(c: &mut Criterion) {
    let pts: Vec<ScalingPoint> = (2..30)
        .map(|n| {
            let n_w = (n * (n + 1) / 2) as f64;
            ScalingPoint { n, n_w, y: 1.3 * n_w.log2().powf(1.2) + 0.4, sigma: 0.05 }
        })
        .collect();
    c.bench_function("LM fit polylog 28 points", |b| b.iter(|| fit_model(black_box(&pts), Model::Polylog)));
    c.bench_function("LM fit poly 28 points", |b| b.iter(|| fit_model(black_box(&pts), Model::Poly)));
}

criterion_group!(benches, posterior, oracle, sampling, bootstrap, lm_fit);
criterion_main!(benches);
