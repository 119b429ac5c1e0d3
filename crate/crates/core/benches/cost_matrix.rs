use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use arbormatch::distance::prepared_cost;
use arbormatch::synth::{generate, SynthParams};
use arbormatch::{par, PathSet, PreparedPath};

fn prepared(name: &str, seed: u64, m: usize) -> Vec<PreparedPath> {
    let set = PathSet::from_tree(name, &generate(&SynthParams::preset(name).unwrap(), seed));
    set.paths
        .iter()
        .map(|p| PreparedPath::new(p, m).unwrap())
        .collect()
}

fn fill(c: &mut Criterion) {
    let mut group = c.benchmark_group("cost_matrix_fill");
    for m in [100, 400] {
        let rows = prepared("four_level", 1, m);
        let cols = prepared("four_level", 2, m);
        let n = rows.len() * cols.len();
        let cell = |k: usize| {
            prepared_cost(&rows[k / cols.len()], &cols[k % cols.len()], 1.0)
                .unwrap()
                .value
        };
        group.bench_with_input(BenchmarkId::new("parallel", m), &m, |b, _| {
            b.iter(|| par::map_range(n, cell))
        });
        group.bench_with_input(BenchmarkId::new("sequential", m), &m, |b, _| {
            b.iter(|| par::map_range_seq(n, cell))
        });
    }
    group.finish();
}

fn corpus(c: &mut Criterion) {
    let cfg = arbormatch::ElasticConfig::default();
    let sets: Vec<PathSet> = SynthParams::presets()
        .iter()
        .flat_map(|(name, p)| (0..3).map(move |s| PathSet::from_tree(*name, &generate(p, s))))
        .collect();
    let n = sets.len();
    let pair = |k: usize| {
        arbormatch::neuron_distance(&sets[k / n], &sets[k % n], &cfg)
            .unwrap()
            .0
    };
    let mut group = c.benchmark_group("distance_matrix");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| par::map_range(n * n, pair)));
    group.bench_function("sequential", |b| b.iter(|| par::map_range_seq(n * n, pair)));
    group.finish();
}

criterion_group!(benches, fill, corpus);
criterion_main!(benches);
