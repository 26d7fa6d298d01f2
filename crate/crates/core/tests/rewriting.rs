mod common;

use proptest::prelude::*;

use treetackle::gen::{corpus_pair, random_rpq, random_ucq};
use treetackle::instance::InstanceBuilder;
use treetackle::par::block_rng;
use treetackle::pipeline::{prepare, PipelineConfig};
use treetackle::query::{disconnect_rewrite, parse_query, prune_relations, Query};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruning_and_rewriting_keep_the_probability(i in 0usize..3000) {
        let p = corpus_pair(61, i);
        prop_assume!(p.instance.num_vars() <= 12);
        let want = common::exact_prob(&p.instance, &p.query);
        let pruned = prune_relations(&p.instance, &p.query);
        prop_assert!((common::exact_prob(&pruned, &p.query) - want).abs() < 1e-9);
        let cfg = PipelineConfig { rewrite: true, ..PipelineConfig::default() };
        let prepared = prepare(&p.instance, &p.query, &cfg).unwrap();
        prop_assert!((common::exact_prob(&prepared, &p.query) - want).abs() < 1e-9, "{}", p.name);
    }

    #[test]
    fn rewriting_never_adds_gaifman_edges(i in 0usize..3000) {
        let p = corpus_pair(62, i);
        let Query::Ucq(u) = &p.query else { return Ok(()) };
        let out = disconnect_rewrite(&p.instance, u);
        prop_assert!(out.gaifman_graph().num_edges() <= p.instance.gaifman_graph().num_edges());
        prop_assert_eq!(out.facts().len(), p.instance.facts().len());
    }

    #[test]
    fn printed_queries_parse_back(seed: u64) {
        let mut rng = block_rng(seed, 0);
        let u = Query::Ucq(random_ucq(3, 4, &mut rng));
        prop_assert_eq!(parse_query(&u.to_string()).unwrap(), u);
        let inst = corpus_pair(seed, 0).instance;
        prop_assume!(!inst.elements().is_empty());
        let r = Query::Rpq(random_rpq(&inst, &mut rng));
        prop_assert_eq!(parse_query(&r.to_string()).unwrap(), r);
    }
}

#[test]
fn unjoined_path_splits_into_components() {
    let inst = InstanceBuilder::new().fact("R", &["a", "b"], 0.5).fact("S", &["b", "c"], 0.5).build().unwrap();
    let Query::Ucq(q) = parse_query("q() :- R(x, y), S(z, w).").unwrap() else { unreachable!() };
    assert_eq!(inst.gaifman_graph().num_edges(), 2);
    assert_eq!(inst.gaifman_graph().components().len(), 1);
    let out = disconnect_rewrite(&inst, &q);
    assert_eq!(out.gaifman_graph().components().len(), 2);
}
