use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use treetackle::gen::{corpus, grid_pair};
use treetackle::par::Exec;
use treetackle::pipeline::{build_lineage, prepare, Determinize, PipelineConfig};
use treetackle::prob::{prob_message_passing, prob_monte_carlo_with};
use treetackle::query::Query;
use treetackle::treedec::partial_decompose_protecting;

fn execs() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Exec::Parallel));
    v
}

fn sampling(c: &mut Criterion) {
    let pair = grid_pair(1, 0);
    let cfg = PipelineConfig::default();
    let lin = build_lineage(&pair.instance, &pair.query, &cfg, Determinize::No).unwrap();
    let Query::Rpq(q) = &pair.query else { unreachable!() };
    let work = prepare(&pair.instance, &pair.query, &cfg).unwrap();
    let pd = partial_decompose_protecting(&work, 2, &[&q.source, &q.target]);

    let mut g = c.benchmark_group("sampling");
    g.sample_size(20);
    for (name, exec) in execs() {
        g.bench_with_input(BenchmarkId::new("monte_carlo", name), &exec, |b, &exec| {
            b.iter(|| prob_monte_carlo_with(&lin.circuit, 200_000, 7, exec).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("hybrid", name), &exec, |b, &exec| {
            b.iter(|| treetackle::hybrid::hybrid_estimate_with(&pd, q, 200_000, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn exact(c: &mut Criterion) {
    let pairs = corpus(2024, 40);
    let circuits: Vec<_> = pairs
        .iter()
        .map(|p| build_lineage(&p.instance, &p.query, &PipelineConfig::default(), Determinize::No).unwrap().circuit)
        .collect();
    let mut g = c.benchmark_group("exact");
    g.sample_size(10);
    g.bench_function("message_passing/corpus40", |b| {
        b.iter(|| circuits.iter().map(|c| prob_message_passing(c).unwrap().value).sum::<f64>())
    });
    g.finish();
}

criterion_group!(benches, sampling, exact);
criterion_main!(benches);
