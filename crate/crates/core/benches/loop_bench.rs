//! Sequential vs parallel execution of the loop's hot spots.
//!
//! `cargo bench -p loopsim-core`. Building with `--no-default-features`
//! turns both variants sequential, which is a quick way to confirm the
//! fallback costs nothing extra.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use loopsim_core::data::synthetic::{CountrySkewConfig, GeneratorConfig};
use loopsim_core::data::UserItemMatrix;
use loopsim_core::par::map_range;
use loopsim_core::recommend::{recommend_top_k, ItemKnnConfig, ItemKnnModel};
use loopsim_core::sim::{Simulation, SimulationConfig};
use loopsim_core::{InteractionDataset, Parallelism, UserIdx};

const MODES: [Parallelism; 2] = [Parallelism::Sequential, Parallelism::Parallel];

fn dataset() -> InteractionDataset {
    GeneratorConfig::CountrySkew(CountrySkewConfig::lfm_one_percent())
        .generate(1)
        .expect("preset generates")
}

fn label(p: Parallelism) -> &'static str {
    match p {
        Parallelism::Sequential => "sequential",
        Parallelism::Parallel => "parallel",
    }
}

fn bench_itemknn(c: &mut Criterion) {
    let ds = dataset();
    let train = UserItemMatrix::full(&ds);
    let mut group = c.benchmark_group("itemknn");
    for mode in MODES {
        group.bench_with_input(BenchmarkId::new("fit", label(mode)), &mode, |b, &mode| {
            b.iter(|| ItemKnnModel::fit(&train, &ItemKnnConfig::default(), mode).unwrap())
        });
        let model = ItemKnnModel::fit(&train, &ItemKnnConfig::default(), mode).unwrap();
        group.bench_with_input(BenchmarkId::new("recommend_all", label(mode)), &mode, |b, &mode| {
            b.iter(|| {
                map_range(mode, ds.num_users(), |u| {
                    let u = UserIdx(u as u32);
                    recommend_top_k(&model, u, 10, ds.seen(u)).unwrap()
                })
            })
        });
    }
    group.finish();
}

fn bench_iteration(c: &mut Criterion) {
    let ds = dataset();
    let mut group = c.benchmark_group("pop_iteration");
    for mode in MODES {
        let cfg = SimulationConfig {
            parallelism: mode,
            ..SimulationConfig::default()
        };
        let sim = Simulation::new(&ds, cfg).unwrap();
        group.bench_function(label(mode), |b| {
            b.iter(|| sim.run_iteration(sim.initial(), 1, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_itemknn, bench_iteration);
criterion_main!(benches);
