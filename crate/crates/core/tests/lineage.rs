mod common;

use proptest::prelude::*;

use treetackle::automaton::compile_ucq;
use treetackle::encoding::encode_with_capacity;
use treetackle::gen::corpus_pair;
use treetackle::lineage::build_lineage_ucq;
use treetackle::pipeline::{build_lineage, prepare, Determinize, PipelineConfig};
use treetackle::query::Query;
use treetackle::treedec::{decompose, Heuristic};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lineage_is_true_exactly_on_satisfying_worlds(i in 0usize..3000, det in prop_oneof![Just(Determinize::No), Just(Determinize::Try)]) {
        let p = corpus_pair(77, i);
        prop_assume!(p.instance.num_vars() <= 12);
        let lin = build_lineage(&p.instance, &p.query, &PipelineConfig::default(), det).unwrap();
        for (w, _) in common::worlds(&p.instance) {
            let facts = common::facts_where(&p.instance, |v| v.is_none_or(|v| w.contains(v)));
            prop_assert_eq!(lin.circuit.eval(&w), common::holds(&facts, &p.query), "{} in world {:?}", p.name, w);
        }
    }

    #[test]
    fn circuits_are_well_formed(i in 0usize..3000) {
        let p = corpus_pair(78, i);
        for det in [Determinize::No, Determinize::Try] {
            let c = build_lineage(&p.instance, &p.query, &PipelineConfig::default(), det).unwrap().circuit;
            prop_assert!(c.validate().is_ok());
            let td = c.companion_td.as_ref().unwrap();
            prop_assert!(td.validate(&c.wiring_graph()).is_ok());
            if c.ddnnf {
                prop_assert!(c.is_decomposable());
                if c.var_probs.len() <= 12 {
                    prop_assert_eq!(c.is_deterministic_exhaustive(12), Some(true));
                }
            }
        }
    }

    #[test]
    fn ucq_lineage_is_linear_in_the_encoding(i in 0usize..3000) {
        let p = corpus_pair(79, i);
        let Query::Ucq(u) = &p.query else { return Ok(()) };
        let cfg = PipelineConfig::default();
        let work = prepare(&p.instance, &p.query, &cfg).unwrap();
        prop_assume!(!work.facts().is_empty());
        let td = decompose(&work.gaifman_graph(), Heuristic::MinFill);
        let arity = u.disjuncts.iter().map(|d| d.max_arity()).max().unwrap();
        let enc = encode_with_capacity(&work, &td, arity).unwrap();
        let a = compile_ucq(u, enc.slot_capacity).unwrap();
        let c = build_lineage_ucq(&a, &enc).unwrap();
        let bound = enc.nodes.len() * (a.num_states() + 2 * a.num_transitions());
        prop_assert!(c.num_gates() <= bound.max(1), "{} gates, bound {}", c.num_gates(), bound);
    }
}
