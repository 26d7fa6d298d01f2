use std::collections::BTreeSet;

use proptest::prelude::*;

use treetackle::gen::{corpus_pair, k_tree, random_graph};
use treetackle::instance::TidInstance;
use treetackle::par::block_rng;
use treetackle::treedec::{best_lower_bound, decompose, partial_decompose, Heuristic};

fn fact_keys(inst: &TidInstance) -> Vec<String> {
    inst.facts().iter().map(|f| format!("{} {}", inst.fact_display(f), f.prob)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn heuristics_are_valid_and_above_lower_bound(n in 1usize..=60, p in 0.02f64..0.4, seed: u64) {
        let g = random_graph(n, p, &mut block_rng(seed, 0));
        let lb = best_lower_bound(&g);
        for h in [Heuristic::MinFill, Heuristic::MinDegree] {
            let td = decompose(&g, h);
            prop_assert!(td.validate(&g).is_ok());
            prop_assert!(lb <= td.width, "lower bound {} above width {}", lb, td.width);
        }
    }

    #[test]
    fn min_fill_is_exact_on_k_trees(k in 1usize..=5, extra in 1usize..=35, seed: u64) {
        let g = k_tree(k + extra, k, &mut block_rng(seed, 1));
        let td = decompose(&g, Heuristic::MinFill);
        prop_assert_eq!(td.width, k);
        prop_assert_eq!(best_lower_bound(&g), k);
    }

    #[test]
    fn pace_round_trip(n in 1usize..=30, p in 0.05f64..0.5, seed: u64) {
        let g = random_graph(n, p, &mut block_rng(seed, 2));
        let td = decompose(&g, Heuristic::MinFill);
        let (back, nv) = treetackle::treedec::TreeDecomposition::parse_pace(&td.to_pace(n)).unwrap();
        prop_assert_eq!(nv, n);
        prop_assert_eq!(back.width, td.width);
        prop_assert!(back.validate(&g).is_ok());
    }

    #[test]
    fn partial_decomposition_partitions_facts(i in 0usize..2000, cap in 0usize..=4) {
        let inst = corpus_pair(31, i).instance;
        let pd = partial_decompose(&inst, cap);

        let mut parts = fact_keys(&pd.core);
        for t in &pd.tentacles {
            parts.extend(fact_keys(&t.instance));
            prop_assert!(t.decomposition.validate(&t.instance.gaifman_graph()).is_ok());
            prop_assert!(t.decomposition.width <= cap.max(t.boundary.len()));
        }
        let mut input = fact_keys(&inst);
        parts.sort();
        input.sort();
        prop_assert_eq!(parts, input);

        let mut seen = BTreeSet::new();
        for t in &pd.tentacles {
            for e in &t.interior {
                prop_assert!(seen.insert(e.clone()), "{} in two interiors", e);
                prop_assert!(pd.core.element_id(e).is_none());
            }
        }
        prop_assert!(pd.core_size_ratio() <= 1.0);

        if cap >= decompose(&inst.gaifman_graph(), Heuristic::MinDegree).width {
            prop_assert!(pd.core.facts().is_empty());
        }
    }
}
