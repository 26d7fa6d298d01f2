mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;

use treetackle::automaton::{compile_cq, compile_ucq, determinize, run_certain, run_on_world};
use treetackle::encoding::{decode, encode, encode_with_capacity};
use treetackle::gen::{corpus_pair, random_ucq};
use treetackle::instance::{TidInstance, World};
use treetackle::par::block_rng;
use treetackle::query::{Query, UcqQuery};
use treetackle::treedec::{decompose, td_from_ordering, Heuristic};

fn ucq_pair(i: usize) -> (TidInstance, UcqQuery) {
    let p = corpus_pair(57, i);
    let q = match p.query {
        Query::Ucq(u) => u,
        Query::Rpq(_) => random_ucq(2, 3, &mut block_rng(57, i as u64 + 1_000_000)),
    };
    (p.instance, q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_count_and_facts_are_preserved(i in 0usize..2000) {
        let inst = corpus_pair(5, i).instance;
        let g = inst.gaifman_graph();
        let td = decompose(&g, Heuristic::MinFill);
        let enc = encode(&inst, &td).unwrap();

        let covered = td
            .bags
            .iter()
            .map(|b| inst.facts().iter().filter(|f| f.args.iter().all(|a| b.binary_search(&a.index()).is_ok())).count())
            .max()
            .unwrap_or(0);
        prop_assert!(enc.nodes.len() <= td.num_bags() * (1 + covered) * 2);

        let mut before: Vec<String> = inst.facts().iter().map(|f| format!("{} {}", f.relation, f.prob)).collect();
        let mut after: Vec<String> = enc.nodes.iter().filter_map(|n| n.fact.as_ref()).map(|f| format!("{} {}", f.relation, f.prob)).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);

        prop_assert_eq!(enc.to_text(), encode(&inst, &td).unwrap().to_text());
        prop_assert_eq!(decode(&enc).unwrap().to_tsv().lines().count(), inst.facts().len());
    }

    #[test]
    fn acceptance_does_not_depend_on_the_decomposition(i in 0usize..2000, seed: u64) {
        let (inst, q) = ucq_pair(i);
        let world = inst.sample_world(seed);
        let certain = inst.world_instance(&world);
        let expected = common::holds(&common::facts_where(&certain, |_| true), &Query::Ucq(q.clone()));
        let g = certain.gaifman_graph();
        let mut order: Vec<usize> = (0..g.num_vertices()).collect();
        order.shuffle(&mut block_rng(seed, 9));
        let arity = q.disjuncts.iter().map(|d| d.max_arity()).max().unwrap_or(0);
        for td in [decompose(&g, Heuristic::MinFill), decompose(&g, Heuristic::MinDegree), td_from_ordering(&g, &order)] {
            let enc = encode_with_capacity(&certain, &td, arity).unwrap();
            let nfa = compile_ucq(&q, enc.slot_capacity).unwrap();
            let dfa = determinize(&nfa, 100_000).unwrap();
            prop_assert_eq!(run_certain(&nfa, &enc).unwrap(), expected);
            prop_assert_eq!(run_certain(&dfa, &enc).unwrap(), expected);
        }
    }

    #[test]
    fn worlds_agree_with_the_oracle(i in 0usize..2000, seed: u64) {
        let (inst, q) = ucq_pair(i);
        let td = decompose(&inst.gaifman_graph(), Heuristic::MinFill);
        let arity = q.disjuncts.iter().map(|d| d.max_arity()).max().unwrap_or(0);
        let enc = encode_with_capacity(&inst, &td, arity).unwrap();
        let nfa = compile_ucq(&q, enc.slot_capacity).unwrap();
        let world = inst.sample_world(seed);
        let expected = common::holds(
            &common::facts_where(&inst, |v| v.is_none_or(|v| world.contains(v))),
            &Query::Ucq(q.clone()),
        );
        prop_assert_eq!(run_on_world(&nfa, &enc, &world).unwrap(), expected);
        prop_assert_eq!(run_on_world(&nfa, &enc, &World::new()).unwrap(),
            common::holds(&common::facts_where(&inst, |v| v.is_none()), &Query::Ucq(q)));
    }

    #[test]
    fn cq_state_count_is_bounded(i in 0usize..2000) {
        let (inst, q) = ucq_pair(i);
        let td = decompose(&inst.gaifman_graph(), Heuristic::MinFill);
        for d in &q.disjuncts {
            let enc = encode_with_capacity(&inst, &td, d.max_arity()).unwrap();
            let a = compile_cq(d, enc.slot_capacity).unwrap();
            let world = inst.sample_world(i as u64);
            run_on_world(&a, &enc, &world).unwrap();
            let bound = (enc.slot_capacity as f64 + 2.0).powi(d.variables.len() as i32) * 2f64.powi(d.atoms.len() as i32);
            prop_assert!((a.num_states() as f64) <= bound, "{} states, bound {}", a.num_states(), bound);
        }
    }
}
