mod common;

use proptest::prelude::*;

use treetackle::gen::{corpus_pair, grid_pair};
use treetackle::hybrid::{hybrid_estimate, summarize_tentacle, B_MAX};
use treetackle::pipeline::{prepare, run, Method, PipelineConfig};
use treetackle::query::Query;
use treetackle::treedec::partial_decompose_protecting;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summaries_match_enumeration(grid: bool, i in 0usize..3000, cap in 1usize..=3) {
        let p = if grid { grid_pair(41, i) } else { corpus_pair(41, i) };
        let pd = partial_decompose_protecting(&p.instance, cap, &[]);
        prop_assert!(pd.core_size_ratio() <= 1.0);
        for t in pd.tentacles.iter().filter(|t| t.boundary.len() <= B_MAX && t.instance.num_vars() <= 14) {
            for rel in p.instance.relations().keys() {
                let s = summarize_tentacle(t, rel).unwrap();
                let want = common::tentacle_patterns(t, rel);
                prop_assert_eq!(s.probs.len(), want.len());
                for (a, b) in s.probs.iter().zip(&want) {
                    prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
                }
                prop_assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(s.closed());
            }
        }
    }
}

#[test]
fn grid_estimates_cover_the_exact_answer() {
    let mut inside = 0;
    for i in 0..30 {
        let p = grid_pair(43, i);
        let Query::Rpq(q) = &p.query else { unreachable!() };
        let exact = run(&p.instance, &p.query, &PipelineConfig { method: Method::Mp, ..PipelineConfig::default() })
            .unwrap()
            .result
            .value;
        let work = prepare(&p.instance, &p.query, &PipelineConfig::default()).unwrap();
        let pd = partial_decompose_protecting(&work, 2, &[&q.source, &q.target]);
        let h = hybrid_estimate(&pd, q, 20_000, i as u64).unwrap();
        assert!(h.work_reduction() > 0, "{}", p.name);
        assert!(h.core_size_ratio < 1.0);
        if (h.value - exact).abs() <= 4.0 * h.stderr.max(1e-12) {
            inside += 1;
        }
    }
    assert!(inside >= 28, "{inside}/30 within four standard errors");
}

#[test]
fn hybrid_is_reproducible() {
    let p = grid_pair(44, 0);
    let cfg = PipelineConfig { method: Method::Hybrid, samples: 5000, seed: 3, ..PipelineConfig::default() };
    let a = run(&p.instance, &p.query, &cfg).unwrap();
    let b = run(&p.instance, &p.query, &cfg).unwrap();
    assert_eq!(a.result.value, b.result.value);
    assert_eq!(a.result.stderr, b.result.stderr);
}
