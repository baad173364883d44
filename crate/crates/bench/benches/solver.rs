use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modefuse::graph::{Provenance, RelationGraph};
use modefuse::trifactor::{self, SolverConfig};

/// A chain of three relations over concepts of the given cardinality.
fn chain_graph(n: usize, seed: u64) -> RelationGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = RelationGraph::new();
    let ids: Vec<_> = ["a", "b", "c", "d"]
        .iter()
        .map(|name| {
            let labels = (0..n).map(|i| format!("{name}{i}")).collect();
            graph.add_concept(name, labels).unwrap()
        })
        .collect();
    for pair in ids.windows(2) {
        let m = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..10.0));
        graph.add_relation(pair[0], pair[1], m, Provenance::Survey).unwrap();
    }
    graph
}

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for n in [10usize, 40, 100] {
        let graph = chain_graph(n, 3);
        let ranks = graph.default_ranks();
        let config = SolverConfig {
            max_iterations: 50,
            relative_tolerance: 0.0, // run all 50 iterations
            seed: 7,
            ..SolverConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("chain_50_iters", n), &n, |b, _| {
            b.iter(|| trifactor::fit(&graph, &ranks, &config).unwrap())
        });
    }
    group.finish();
}

fn bench_update_steps(c: &mut Criterion) {
    let graph = chain_graph(60, 5);
    let ranks = graph.default_ranks();
    let mut set = trifactor::initialize(&graph, &ranks, 1).unwrap();
    c.bench_function("update_factors_60", |b| {
        b.iter(|| trifactor::update_factors(&graph, &mut set, 1e-12))
    });
    c.bench_function("update_backbones_60", |b| {
        b.iter(|| trifactor::update_backbones(&graph, &mut set))
    });
}

criterion_group!(benches, bench_fit, bench_update_steps);
criterion_main!(benches);
